#include "qmarg/io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qmarg::io {

using nlohmann::json;

namespace {

std::string label_key(const std::vector<int>& labels) {
    std::ostringstream out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out << ',';
        out << labels[i];
    }
    return out.str();
}

json one_based(const std::vector<int>& v) {
    json arr = json::array();
    for (int x : v) arr.push_back(x + 1);
    return arr;
}

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

}  // namespace

StateVector state_from_json(const json& j) {
    if (!j.is_object()) fail("state file must be a JSON object");
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].empty())
        fail("field 'dims' must be a nonempty array of party dimensions");
    std::vector<int> dims;
    for (std::size_t i = 0; i < j["dims"].size(); ++i) {
        const auto& d = j["dims"][i];
        if (!d.is_number_integer() || d.get<long>() < 2)
            fail("dims[" + std::to_string(i) + "] must be an integer >= 2");
        dims.push_back(d.get<int>());
    }
    if (!j.contains("amps") || !j["amps"].is_array()) fail("field 'amps' must be an array of [re, im] pairs");
    long expect = 1;
    for (int d : dims) expect *= d;
    if (static_cast<long>(j["amps"].size()) != expect)
        fail("amps has " + std::to_string(j["amps"].size()) + " entries, expected " + std::to_string(expect));
    Vec amps(expect);
    for (long i = 0; i < expect; ++i) {
        const auto& pair = j["amps"][i];
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
            fail("amps[" + std::to_string(i) + "] must be a [re, im] number pair");
        amps[i] = Cx(pair[0].get<double>(), pair[1].get<double>());
    }
    const double norm = amps.norm();
    if (!(norm > 0) || !std::isfinite(norm)) fail("amplitudes must have a finite nonzero norm");
    if (std::abs(norm - 1.0) > 1e-6)
        std::cerr << "note: input norm " << norm << " deviates from 1; normalizing\n";
    return StateVector(dims, amps);
}

json state_json(const StateVector& state) {
    json j;
    j["dims"] = state.dims();
    json amps = json::array();
    for (long i = 0; i < state.total_dim(); ++i)
        amps.push_back(json::array({state.amps()[i].real(), state.amps()[i].imag()}));
    j["amps"] = std::move(amps);
    return j;
}

StateVector load_state(const std::string& path) { return state_from_json(load_json(path)); }

void save_state(const StateVector& state, const std::string& path) { write_json(state_json(state), path); }

Mat matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) fail("matrix must be a nonempty array of rows");
    const long rows = static_cast<long>(j.size());
    const long cols = static_cast<long>(j[0].size());
    Mat m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (!j[r].is_array() || static_cast<long>(j[r].size()) != cols) fail("matrix rows must have equal length");
        for (long c = 0; c < cols; ++c) {
            const auto& pair = j[r][c];
            if (!pair.is_array() || pair.size() != 2) fail("matrix entries must be [re, im] pairs");
            m(r, c) = Cx(pair[0].get<double>(), pair[1].get<double>());
        }
    }
    return m;
}

json matrix_json(const Mat& m) {
    json rows = json::array();
    for (long r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (long c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

json certificate_json(const SchmidtProjectorSet& cert) {
    json j;
    j["parties"] = one_based(cert.parties);
    if (cert.pivot) j["pivot"] = *cert.pivot + 1;
    json rows = json::array();
    for (int r = 0; r < cert.L(); ++r) {
        json row = json::array();
        for (std::size_t s = 0; s < cert.parties.size(); ++s) {
            json p;
            p["rank"] = cert.rows[r][s].rank;
            p["matrix"] = matrix_json(cert.rows[r][s].matrix);
            row.push_back(std::move(p));
        }
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

json report_json(const AnalysisReport& report) {
    json j;
    j["verdict"] = to_string(report.verdict);
    j["schmidt_number"] = report.schmidt_number;
    j["schmidt_number_is_lower_bound"] = report.schmidt_number_lower_bound;
    j["path"] = to_string(report.path);
    j["pivot"] = report.pivot + 1;
    j["parties"] = one_based(report.subset);
    j["diagnostics"] = report.diagnostics;
    if (report.partition) {
        json part = json::array();
        for (const auto& block : *report.partition) part.push_back(one_based(block));
        j["partition"] = std::move(part);
    }
    if (report.certificate) j["certificate"] = certificate_json(*report.certificate);
    return j;
}

json plan_json(const MeasurementPlan& plan) {
    json j;
    j["dims"] = plan.dims;
    json agents = json::array();
    for (int i = 0; i < plan.agents(); ++i) {
        json agent;
        agent["labels"] = plan.labels[i];
        json projs = json::array();
        for (const Projector& p : plan.outcomes[i]) projs.push_back(matrix_json(p.matrix));
        agent["projectors"] = std::move(projs);
        agents.push_back(std::move(agent));
    }
    j["agents"] = std::move(agents);
    return j;
}

MeasurementPlan plan_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dims") || !j.contains("agents")) fail("plan needs 'dims' and 'agents'");
    MeasurementPlan plan;
    for (const auto& d : j["dims"]) plan.dims.push_back(d.get<int>());
    if (j["agents"].size() != plan.dims.size()) fail("plan needs one agent entry per party");
    for (std::size_t i = 0; i < j["agents"].size(); ++i) {
        const auto& agent = j["agents"][i];
        if (!agent.contains("labels") || !agent.contains("projectors") ||
            agent["labels"].size() != agent["projectors"].size())
            fail("agent " + std::to_string(i + 1) + " needs parallel 'labels' and 'projectors'");
        std::vector<int> labels;
        std::vector<Projector> outcomes;
        for (std::size_t k = 0; k < agent["labels"].size(); ++k) {
            labels.push_back(agent["labels"][k].get<int>());
            Mat m = matrix_from_json(agent["projectors"][k]);
            if (m.rows() != plan.dims[i] || m.cols() != plan.dims[i])
                fail("agent " + std::to_string(i + 1) + " projector " + std::to_string(k) + " has wrong shape");
            outcomes.push_back(Projector::from_matrix(m));
        }
        plan.labels.push_back(std::move(labels));
        plan.outcomes.push_back(std::move(outcomes));
    }
    return plan;
}

MeasurementPlan load_plan(const std::string& path) { return plan_from_json(load_json(path)); }

void save_plan(const MeasurementPlan& plan, const std::string& path) { write_json(plan_json(plan), path); }

json stats_json(const TrialStats& stats) {
    json j;
    j["trials"] = stats.trials;
    j["agreement_frequency"] = stats.agreement_frequency;
    json counts = json::object();
    for (const auto& [labels, c] : stats.outcome_counts) counts[label_key(labels)] = c;
    j["outcome_counts"] = std::move(counts);
    json exact = json::object();
    for (const auto& [labels, p] : stats.exact_distribution) exact[label_key(labels)] = p;
    j["exact_distribution"] = std::move(exact);
    json hist = json::object();
    for (const auto& [v, c] : stats.consensus_value_histogram) hist[std::to_string(v)] = c;
    j["consensus_value_histogram"] = std::move(hist);
    json compare = json::array();
    for (const auto& [labels, p] : stats.exact_distribution) {
        auto it = stats.outcome_counts.find(labels);
        const long c = it == stats.outcome_counts.end() ? 0 : it->second;
        json row;
        row["outcome"] = label_key(labels);
        row["exact"] = p;
        row["empirical"] = static_cast<double>(c) / static_cast<double>(stats.trials);
        row["sigma"] = std::sqrt(p * (1.0 - p) / static_cast<double>(stats.trials));
        compare.push_back(std::move(row));
    }
    j["exact_vs_empirical"] = std::move(compare);
    return j;
}

json probe_json(const ProbeReport& report) {
    json j;
    j["samples_requested"] = report.samples_requested;
    j["samples_run"] = report.samples_run;
    j["structurally_excluded"] = report.structurally_excluded;
    j["excluded_parties"] = one_based(report.excluded_parties);
    if (report.min_random_disagreement) j["min_random_disagreement"] = *report.min_random_disagreement;
    if (report.certificate_disagreement) j["certificate_disagreement"] = *report.certificate_disagreement;
    if (report.min_disagreement) j["min_disagreement"] = *report.min_disagreement;
    return j;
}

json reduction_check_json(const ReductionCheck& check) {
    json j;
    j["same_reductions"] = check.ok;
    j["per_party_residuals"] = check.residuals;
    return j;
}

void write_json(const json& j, const std::string& path) {
    if (path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) fail("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) fail("write to '" + path + "' failed");
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail("parse error in '" + path + "': " + e.what());
    }
    return j;
}

}  // namespace qmarg::io
