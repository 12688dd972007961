#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "qmarg/analysis.hpp"
#include "qmarg/types.hpp"

namespace qmarg {

/// One projective measurement per agent. Labels run parallel to the
/// projectors; label 0 is the bottom outcome (the orthocomplement of the
/// agent's marginal support, never observed on the shared state), labels
/// 1..L are certificate rows.
struct MeasurementPlan {
    std::vector<int> dims;
    std::vector<std::vector<Projector>> outcomes;  // [agent][k]
    std::vector<std::vector<int>> labels;          // [agent][k]

    int agents() const { return static_cast<int>(outcomes.size()); }

    /// Per agent: pairwise orthogonal projectors summing to the identity.
    bool complete(const Tolerances& tol = {}) const;
};

struct SimConfig {
    long trials = 1;
    std::uint64_t seed = 0;
    std::vector<int> failed_agents;     // fail-stop, 0-based; measured but silent
    double drop_probability = 0.0;      // the protocol sends no messages; documented no-op
    int workers = 1;

    void validate(int n_agents) const;
};

struct TrialStats {
    long trials = 0;
    std::map<std::vector<int>, long> outcome_counts;        // full physical label tuples
    std::map<std::vector<int>, double> exact_distribution;  // tuples with probability > tol.rank
    double agreement_frequency = 0.0;                       // over non-failed agents
    std::map<int, long> consensus_value_histogram;          // common label when agreement held
};

/// The consensus measurement: each agent measures its certificate row
/// projectors plus, when its marginal support is not the whole local space,
/// the bottom projector. The certificate is re-verified first.
MeasurementPlan build_consensus_measurements(const StateVector& state, const SchmidtProjectorSet& cert);

/// Exact Born probabilities of every outcome tuple with probability above
/// tol.rank, by depth-first projection without renormalizing. `agent_order`
/// permutes the traversal only; keys are always in party order.
std::map<std::vector<int>, double> joint_outcome_distribution(const StateVector& state, const MeasurementPlan& plan,
                                                              const Tolerances& tol = {},
                                                              const std::vector<int>& agent_order = {});

/// True iff every listed tuple is constant and never the bottom label: the
/// condition under which one shot yields consensus.
bool all_agreeing(const std::map<std::vector<int>, double>& distribution);

/// Sequential Born sampling, one independent sub-seeded generator per trial,
/// so results are identical for any worker count. Failed agents are measured
/// but excluded from the agreement evaluation.
TrialStats run_trials(const StateVector& state, const MeasurementPlan& plan, const SimConfig& config,
                      const Tolerances& tol = {});

struct ProbeReport {
    int samples_requested = 0;
    int samples_run = 0;
    std::vector<int> excluded_parties;  // marginal support rank 1: cannot host two nonnull outcomes
    bool structurally_excluded = false;
    std::optional<double> min_random_disagreement;
    std::optional<double> certificate_disagreement;  // present when the state is undetermined
    std::optional<double> min_disagreement;          // minimum over everything tried
};

/// Empirical support for the necessity direction: random two-outcome rank
/// splits of each agent's marginal support, exact disagreement probability
/// per sampled plan, minimum reported. When the state is undetermined the
/// certificate plan is also evaluated (it achieves zero).
ProbeReport necessity_probe(const StateVector& state, int samples, std::uint64_t seed,
                            const AnalysisOptions& opts = {});

}  // namespace qmarg
