#pragma once

#include <string>

#include <json.hpp>

#include "qmarg/analysis.hpp"
#include "qmarg/consensus.hpp"
#include "qmarg/family.hpp"
#include "qmarg/types.hpp"

namespace qmarg::io {

/// State file schema: {"dims": [d_1,...,d_n], "amps": [[re,im], ...]} with
/// amplitudes row-major (party 1 slowest). Loading normalizes; a norm
/// deviation beyond 1e-6 is reported on stderr. Malformed files raise
/// std::runtime_error naming the offending field.
StateVector state_from_json(const nlohmann::json& j);
nlohmann::json state_json(const StateVector& state);
StateVector load_state(const std::string& path);
void save_state(const StateVector& state, const std::string& path);

Mat matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_json(const Mat& m);

/// Party indices, Schmidt indices, and outcome labels are 1-based in all
/// emitted JSON (label 0 stays the bottom outcome).
nlohmann::json report_json(const AnalysisReport& report);
nlohmann::json certificate_json(const SchmidtProjectorSet& cert);

nlohmann::json plan_json(const MeasurementPlan& plan);
MeasurementPlan plan_from_json(const nlohmann::json& j);
MeasurementPlan load_plan(const std::string& path);
void save_plan(const MeasurementPlan& plan, const std::string& path);

nlohmann::json stats_json(const TrialStats& stats);
nlohmann::json probe_json(const ProbeReport& report);
nlohmann::json reduction_check_json(const ReductionCheck& check);

/// Writes pretty-printed JSON; path "-" means stdout.
void write_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

}  // namespace qmarg::io
