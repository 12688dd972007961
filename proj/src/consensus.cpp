#include "qmarg/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "qmarg/rng.hpp"
#include "qmarg/states.hpp"
#include "qmarg/tensor.hpp"

namespace qmarg {

namespace {

bool tuple_agrees(const std::vector<int>& labels, const std::vector<char>& failed) {
    int common = -1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (failed[i]) continue;
        if (common == -1) common = labels[i];
        if (labels[i] != common || labels[i] == 0) return false;
    }
    return true;
}

void distribution_dfs(const Vec& cur, const std::vector<int>& dims, const MeasurementPlan& plan,
                      const std::vector<int>& order, std::size_t depth, std::vector<int>& labels, double floor,
                      std::map<std::vector<int>, double>& table) {
    if (depth == order.size()) {
        table[labels] = cur.squaredNorm();
        return;
    }
    const int agent = order[depth];
    for (std::size_t k = 0; k < plan.outcomes[agent].size(); ++k) {
        Vec next = apply_party_operator(cur, dims, agent, plan.outcomes[agent][k].matrix);
        if (next.squaredNorm() <= floor) continue;
        labels[agent] = plan.labels[agent][k];
        distribution_dfs(next, dims, plan, order, depth + 1, labels, floor, table);
    }
}

}  // namespace

bool MeasurementPlan::complete(const Tolerances& tol) const {
    if (outcomes.size() != dims.size() || labels.size() != dims.size()) return false;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].size() != labels[i].size() || outcomes[i].empty()) return false;
        const long d = dims[i];
        Mat sum = Mat::Zero(d, d);
        for (std::size_t k = 0; k < outcomes[i].size(); ++k) {
            if (outcomes[i][k].dim() != d) return false;
            for (std::size_t t = k + 1; t < outcomes[i].size(); ++t)
                if ((outcomes[i][k].matrix * outcomes[i][t].matrix).norm() > tol.orth) return false;
            sum += outcomes[i][k].matrix;
        }
        if ((sum - Mat::Identity(d, d)).norm() > tol.recon) return false;
    }
    return true;
}

void SimConfig::validate(int n_agents) const {
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
        throw std::invalid_argument("drop probability must lie in [0,1]");
    if (workers < 1) throw std::invalid_argument("workers must be at least 1");
    for (int a : failed_agents)
        if (a < 0 || a >= n_agents) throw std::invalid_argument("failed agent index out of range");
}

MeasurementPlan build_consensus_measurements(const StateVector& state, const SchmidtProjectorSet& cert) {
    if (static_cast<int>(cert.parties.size()) != state.n())
        throw std::invalid_argument("the consensus plan needs a certificate covering all parties");
    VerifyResult check = verify_schmidt_projectors(state, cert);
    if (!check) throw std::invalid_argument("certificate failed verification: " + check.detail);

    MeasurementPlan plan;
    plan.dims = state.dims();
    plan.outcomes.resize(state.n());
    plan.labels.resize(state.n());
    for (int i = 0; i < state.n(); ++i) {
        const long d = state.dim(i);
        Mat rho = reduced_density(state.amps(), state.dims(), {i});
        Mat supp = support_basis(rho, cert.tol.rank);
        if (supp.cols() < d) {
            Projector bottom;
            bottom.matrix = Mat::Identity(d, d) - supp * supp.adjoint();
            bottom.rank = static_cast<int>(d - supp.cols());
            plan.outcomes[i].push_back(std::move(bottom));
            plan.labels[i].push_back(0);
        }
        for (int j = 0; j < cert.L(); ++j) {
            plan.outcomes[i].push_back(cert.at(j, i));
            plan.labels[i].push_back(j + 1);
        }
    }
    if (!plan.complete(cert.tol)) throw std::invalid_argument("consensus plan is not a complete measurement");
    return plan;
}

std::map<std::vector<int>, double> joint_outcome_distribution(const StateVector& state, const MeasurementPlan& plan,
                                                              const Tolerances& tol,
                                                              const std::vector<int>& agent_order) {
    if (plan.dims != state.dims()) throw std::invalid_argument("plan dimensions do not match the state");
    std::vector<int> order = agent_order;
    if (order.empty()) {
        order.resize(state.n());
        std::iota(order.begin(), order.end(), 0);
    }
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    std::vector<int> all(state.n());
    std::iota(all.begin(), all.end(), 0);
    if (sorted != all) throw std::invalid_argument("agent order must be a permutation of all agents");

    std::map<std::vector<int>, double> table;
    std::vector<int> labels(state.n(), 0);
    distribution_dfs(state.amps(), state.dims(), plan, order, 0, labels, tol.rank, table);
    return table;
}

bool all_agreeing(const std::map<std::vector<int>, double>& distribution) {
    for (const auto& [labels, p] : distribution) {
        for (int v : labels)
            if (v != labels[0] || v == 0) return false;
        (void)p;
    }
    return !distribution.empty();
}

TrialStats run_trials(const StateVector& state, const MeasurementPlan& plan, const SimConfig& config,
                      const Tolerances& tol) {
    if (plan.dims != state.dims()) throw std::invalid_argument("plan dimensions do not match the state");
    config.validate(state.n());

    std::vector<char> failed(state.n(), 0);
    for (int a : config.failed_agents) failed[a] = 1;

    struct Partial {
        std::map<std::vector<int>, long> counts;
        long agreed = 0;
        std::map<int, long> consensus;
    };

    auto run_range = [&](long begin, long end, Partial& out) {
        for (long t = begin; t < end; ++t) {
            std::mt19937_64 rng = sub_rng(config.seed, static_cast<std::uint64_t>(t));
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            Vec cur = state.amps();
            std::vector<int> labels(state.n(), 0);
            for (int agent = 0; agent < state.n(); ++agent) {
                const auto& outs = plan.outcomes[agent];
                std::vector<Vec> branches(outs.size());
                std::vector<double> probs(outs.size());
                double total = 0;
                for (std::size_t k = 0; k < outs.size(); ++k) {
                    branches[k] = apply_party_operator(cur, state.dims(), agent, outs[k].matrix);
                    probs[k] = branches[k].squaredNorm();
                    total += probs[k];
                }
                double draw = unif(rng) * total;
                std::size_t pick = outs.size() - 1;
                for (std::size_t k = 0; k < outs.size(); ++k) {
                    if (draw < probs[k]) {
                        pick = k;
                        break;
                    }
                    draw -= probs[k];
                }
                labels[agent] = plan.labels[agent][pick];
                cur = branches[pick] / std::sqrt(std::max(probs[pick], 1e-300));
            }
            out.counts[labels] += 1;
            if (tuple_agrees(labels, failed)) {
                out.agreed += 1;
                for (int i = 0; i < state.n(); ++i)
                    if (!failed[i]) {
                        out.consensus[labels[i]] += 1;
                        break;
                    }
            }
        }
    };

    const int workers = static_cast<int>(std::min<long>(config.workers, config.trials));
    std::vector<Partial> parts(workers);
    if (workers <= 1) {
        run_range(0, config.trials, parts[0]);
    } else {
        std::vector<std::thread> pool;
        const long chunk = (config.trials + workers - 1) / workers;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(run_range, w * chunk, std::min<long>((w + 1) * chunk, config.trials),
                              std::ref(parts[w]));
        for (auto& th : pool) th.join();
    }

    TrialStats stats;
    stats.trials = config.trials;
    long agreed = 0;
    for (const Partial& part : parts) {
        agreed += part.agreed;
        for (const auto& [labels, c] : part.counts) stats.outcome_counts[labels] += c;
        for (const auto& [v, c] : part.consensus) stats.consensus_value_histogram[v] += c;
    }
    stats.agreement_frequency = static_cast<double>(agreed) / static_cast<double>(config.trials);
    stats.exact_distribution = joint_outcome_distribution(state, plan, tol);
    return stats;
}

ProbeReport necessity_probe(const StateVector& state, int samples, std::uint64_t seed,
                            const AnalysisOptions& opts) {
    if (samples < 0) throw std::invalid_argument("samples must be nonnegative");
    const Tolerances& tol = opts.tol;
    ProbeReport report;
    report.samples_requested = samples;

    std::vector<Mat> supports(state.n());
    for (int i = 0; i < state.n(); ++i) {
        Mat rho = reduced_density(state.amps(), state.dims(), {i});
        supports[i] = support_basis(rho, tol.rank);
        if (supports[i].cols() < 2) report.excluded_parties.push_back(i);
    }
    report.structurally_excluded = !report.excluded_parties.empty();

    auto disagreement = [&](const MeasurementPlan& plan) {
        auto table = joint_outcome_distribution(state, plan, tol);
        double agree = 0;
        for (const auto& [labels, p] : table) {
            bool constant = labels[0] != 0;
            for (int v : labels) constant = constant && v == labels[0];
            if (constant) agree += p;
        }
        // Snap rounding residue to an exact zero so perfect plans read as 0.
        const double dis = std::max(0.0, 1.0 - agree);
        return dis < tol.rank ? 0.0 : dis;
    };

    if (!report.structurally_excluded) {
        for (int s = 0; s < samples; ++s) {
            std::mt19937_64 rng = sub_rng(seed, static_cast<std::uint64_t>(s) + 1);
            MeasurementPlan plan;
            plan.dims = state.dims();
            plan.outcomes.resize(state.n());
            plan.labels.resize(state.n());
            for (int i = 0; i < state.n(); ++i) {
                const long d = state.dim(i);
                const int m = static_cast<int>(supports[i].cols());
                Mat rotated = supports[i] * haar_unitary(m, rng);
                std::uniform_int_distribution<int> split(1, m - 1);
                const int r = split(rng);
                if (m < static_cast<int>(d)) {
                    Projector bottom;
                    bottom.matrix = Mat::Identity(d, d) - supports[i] * supports[i].adjoint();
                    bottom.rank = static_cast<int>(d) - m;
                    plan.outcomes[i].push_back(std::move(bottom));
                    plan.labels[i].push_back(0);
                }
                plan.outcomes[i].push_back(Projector::from_basis(rotated.leftCols(r)));
                plan.labels[i].push_back(1);
                plan.outcomes[i].push_back(Projector::from_basis(rotated.rightCols(m - r)));
                plan.labels[i].push_back(2);
            }
            double dis = disagreement(plan);
            if (!report.min_random_disagreement || dis < *report.min_random_disagreement)
                report.min_random_disagreement = dis;
            ++report.samples_run;
        }
    }

    AnalysisReport analysis = analyze(state, opts);
    if (analysis.verdict == Verdict::undetermined) {
        MeasurementPlan plan = build_consensus_measurements(state, *analysis.certificate);
        report.certificate_disagreement = disagreement(plan);
    }

    if (report.min_random_disagreement) report.min_disagreement = report.min_random_disagreement;
    if (report.certificate_disagreement &&
        (!report.min_disagreement || *report.certificate_disagreement < *report.min_disagreement))
        report.min_disagreement = report.certificate_disagreement;
    return report;
}

}  // namespace qmarg
