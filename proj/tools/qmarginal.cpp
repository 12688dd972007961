#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmarg/analysis.hpp"
#include "qmarg/consensus.hpp"
#include "qmarg/family.hpp"
#include "qmarg/io.hpp"
#include "qmarg/states.hpp"

namespace {

using namespace qmarg;

constexpr int kExitDetermined = 0;
constexpr int kExitError = 1;
constexpr int kExitRefusal = 2;
constexpr int kExitUndetermined = 10;

std::vector<int> to_zero_based(const std::vector<int>& parties, int n, const char* what) {
    std::vector<int> out;
    for (int p : parties) {
        if (p < 1 || p > n) throw std::runtime_error(std::string(what) + " index out of range: " + std::to_string(p));
        out.push_back(p - 1);
    }
    return out;
}

struct GenArgs {
    std::string kind;
    std::string out = "-";
    int n = 3;
    int d = 2;
    std::vector<int> dims;
    std::vector<double> lambda;
    std::vector<int> basis;
    std::uint64_t seed = 0;
};

int run_gen(const GenArgs& a) {
    StateVector state = [&] {
        if (a.kind == "ghz") return ghz(a.n, a.d);
        if (a.kind == "w") return w_state(a.n);
        if (a.kind == "completely-gsd") {
            if (a.dims.empty()) throw std::runtime_error("completely-gsd needs --dims");
            if (a.lambda.empty()) throw std::runtime_error("completely-gsd needs --lambda");
            double sum = 0;
            for (double w : a.lambda) {
                if (!(w > 0)) throw std::runtime_error("--lambda entries must be positive");
                sum += w;
            }
            if (std::abs(sum - 1.0) > 1e-9) std::cerr << "note: weights sum to " << sum << "; normalizing\n";
            return completely_correlated(a.dims, a.lambda);
        }
        if (a.kind == "haar") {
            if (a.dims.empty()) throw std::runtime_error("haar needs --dims");
            return haar_random(a.dims, a.seed);
        }
        if (a.kind == "product") {
            if (a.dims.empty()) throw std::runtime_error("product needs --dims");
            return product_state(a.dims, a.basis.empty() ? std::vector<int>(a.dims.size(), 0) : a.basis);
        }
        throw std::runtime_error("unknown kind '" + a.kind + "' (ghz | w | completely-gsd | haar | product)");
    }();
    io::save_state(state, a.out);
    return 0;
}

struct AnalyzeArgs {
    std::string path;
    std::string out;
    std::optional<double> tol;
    std::optional<int> pivot;
    std::vector<int> subset;
};

AnalysisOptions make_options(const std::optional<double>& tol) {
    AnalysisOptions opts;
    if (tol) {
        if (!(*tol > 0)) throw std::runtime_error("--tol must be positive");
        opts.tol.orth = *tol;
        opts.tol.recon = *tol;
    }
    return opts;
}

int run_analyze(const AnalyzeArgs& a) {
    StateVector state = io::load_state(a.path);
    AnalysisOptions opts = make_options(a.tol);
    if (a.pivot) {
        if (*a.pivot < 1 || *a.pivot > state.n()) throw std::runtime_error("--pivot out of range");
        opts.pivot = *a.pivot - 1;
    }
    AnalysisReport report = a.subset.empty()
                                ? analyze(state, opts)
                                : s_local_analyze(state, to_zero_based(a.subset, state.n(), "--subset"), opts);

    std::ostringstream summary;
    summary << "verdict: " << to_string(report.verdict) << " (Schmidt number " << report.schmidt_number
            << (report.schmidt_number_lower_bound ? "+" : "") << ", pivot party " << report.pivot + 1 << ", "
            << to_string(report.path) << " path)";
    if (a.out.empty()) {
        std::cerr << summary.str() << '\n';
        io::write_json(io::report_json(report), "-");
    } else {
        io::write_json(io::report_json(report), a.out);
        std::cout << summary.str() << "; report written to " << a.out << '\n';
    }
    return report.verdict == Verdict::undetermined ? kExitUndetermined : kExitDetermined;
}

struct FamilyArgs {
    std::string path;
    std::string out;
    std::string prefix = "member";
    std::vector<double> phases;
    int sample = 0;
    std::uint64_t seed = 0;
    std::optional<double> tol;
};

int run_family(const FamilyArgs& a) {
    StateVector state = io::load_state(a.path);
    AnalysisOptions opts = make_options(a.tol);
    AnalysisReport report = analyze(state, opts);
    if (report.verdict != Verdict::undetermined) {
        std::cerr << "refused: the state is determined by its reduced states; it has no family\n";
        return kExitRefusal;
    }
    ReductionFamily fam = ReductionFamily::from_analysis(state, report);
    if (!a.phases.empty() && a.sample > 0) throw std::runtime_error("--phases and --sample are exclusive");
    if (a.phases.empty() && a.sample == 0) throw std::runtime_error("need --phases or --sample");

    std::vector<StateVector> members;
    if (!a.phases.empty()) {
        if (static_cast<int>(a.phases.size()) != fam.L())
            throw std::runtime_error("--phases needs exactly " + std::to_string(fam.L()) + " entries");
        members.push_back(family_member(fam, a.phases));
    } else {
        for (int s = 0; s < a.sample; ++s) members.push_back(sample_member(fam, a.seed + static_cast<std::uint64_t>(s)));
    }

    nlohmann::json summary;
    summary["rows"] = fam.L();
    summary["special_case"] = fam.special_case;
    nlohmann::json entries = nlohmann::json::array();
    bool all_ok = true;
    for (std::size_t i = 0; i < members.size(); ++i) {
        ReductionCheck check = verify_same_reductions(state, members[i], opts.tol);
        all_ok = all_ok && check.ok;
        const std::string path = a.prefix + "_" + std::to_string(i) + ".json";
        io::save_state(members[i], path);
        nlohmann::json entry = io::reduction_check_json(check);
        entry["path"] = path;
        entry["distinct_from_base"] = distinctness(state, members[i], opts.tol);
        entries.push_back(std::move(entry));
        double worst = *std::max_element(check.residuals.begin(), check.residuals.end());
        std::cout << "wrote " << path << " (reductions " << (check.ok ? "match" : "DIFFER") << ", max residual "
                  << worst << ")\n";
    }
    summary["members"] = std::move(entries);
    if (!a.out.empty()) io::write_json(summary, a.out);
    return all_ok ? 0 : kExitError;
}

struct VerifyArgs {
    std::string a, b;
    std::string out;
    std::optional<double> tol;
};

int run_verify(const VerifyArgs& v) {
    StateVector a = io::load_state(v.a);
    StateVector b = io::load_state(v.b);
    AnalysisOptions opts = make_options(v.tol);
    ReductionCheck check = verify_same_reductions(a, b, opts.tol);
    double worst = *std::max_element(check.residuals.begin(), check.residuals.end());
    std::cout << "same reductions: " << (check.ok ? "yes" : "no") << " (max per-party residual " << worst << ")\n";
    if (!v.out.empty()) io::write_json(io::reduction_check_json(check), v.out);
    return check.ok ? 0 : kExitUndetermined;
}

struct SimArgs {
    std::string path;
    std::string plan_path;
    std::string out;
    long trials = 10000;
    std::uint64_t seed = 0;
    std::vector<int> fail;
    double drop = 0.0;
    int workers = 1;
    std::optional<double> tol;
};

int run_simulate(const SimArgs& a) {
    StateVector state = io::load_state(a.path);
    AnalysisOptions opts = make_options(a.tol);

    MeasurementPlan plan;
    bool cert_plan = false;
    if (!a.plan_path.empty()) {
        plan = io::load_plan(a.plan_path);
    } else {
        AnalysisReport report = analyze(state, opts);
        if (report.verdict != Verdict::undetermined) {
            std::cerr << "refused: determined state and no --plan given; there is no consensus measurement\n";
            return kExitRefusal;
        }
        plan = build_consensus_measurements(state, *report.certificate);
        cert_plan = true;
    }

    SimConfig config;
    config.trials = a.trials;
    config.seed = a.seed;
    config.failed_agents = to_zero_based(a.fail, state.n(), "--fail");
    config.drop_probability = a.drop;
    config.workers = a.workers;

    TrialStats stats = run_trials(state, plan, config, opts.tol);
    const bool agreeing = all_agreeing(stats.exact_distribution);
    std::cout << "agreement frequency " << stats.agreement_frequency << " over " << stats.trials << " trials ("
              << state.n() << " agents, " << config.failed_agents.size() << " failed, drop "
              << config.drop_probability << "); exact distribution "
              << (agreeing ? "is consensus-only" : "contains disagreement") << '\n';
    if (!a.out.empty()) io::write_json(io::stats_json(stats), a.out);
    if (!cert_plan) return 0;
    return agreeing && stats.agreement_frequency == 1.0 ? 0 : kExitError;
}

struct ProbeArgs {
    std::string path;
    std::string out;
    int samples = 200;
    std::uint64_t seed = 0;
    std::optional<double> tol;
};

int run_probe(const ProbeArgs& a) {
    StateVector state = io::load_state(a.path);
    AnalysisOptions opts = make_options(a.tol);
    ProbeReport report = necessity_probe(state, a.samples, a.seed, opts);
    if (report.structurally_excluded) {
        std::cout << "structurally excluded: some marginal supports have rank 1, so two nonnull outcomes per agent are impossible\n";
    } else {
        std::cout << "min disagreement " << (report.min_disagreement ? *report.min_disagreement : 1.0) << " over "
                  << report.samples_run << " sampled plans";
        if (report.certificate_disagreement)
            std::cout << "; certificate plan achieves " << *report.certificate_disagreement;
        std::cout << '\n';
    }
    if (!a.out.empty()) io::write_json(io::probe_json(report), a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Marginal-determinedness analysis, state families, and consensus simulation"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a state file");
    gen_cmd->add_option("kind", gen.kind, "ghz | w | completely-gsd | haar | product")->required();
    gen_cmd->add_option("--out", gen.out, "output path (- for stdout)");
    gen_cmd->add_option("--n", gen.n, "party count (ghz, w)");
    gen_cmd->add_option("--d", gen.d, "local dimension (ghz)");
    gen_cmd->add_option("--dims", gen.dims, "party dimensions")->delimiter(',');
    gen_cmd->add_option("--lambda", gen.lambda, "positive weights (completely-gsd)")->delimiter(',');
    gen_cmd->add_option("--basis", gen.basis, "levels, 0-based (product)")->delimiter(',');
    gen_cmd->add_option("--seed", gen.seed, "seed (haar)");

    AnalyzeArgs an;
    auto* an_cmd = app.add_subcommand("analyze", "Decide determinedness and emit a certificate");
    an_cmd->add_option("state", an.path, "state file")->required();
    an_cmd->add_option("--out", an.out, "report path (default: JSON to stdout)");
    double an_tol = 0;
    auto* an_tol_opt = an_cmd->add_option("--tol", an_tol, "override orthogonality/reconstruction tolerance");
    int an_pivot = 0;
    auto* an_pivot_opt = an_cmd->add_option("--pivot", an_pivot, "force the pivot party (1-based)");
    an_cmd->add_option("--subset", an.subset, "restrict rows to these parties (1-based)")->delimiter(',');

    FamilyArgs fa;
    auto* fa_cmd = app.add_subcommand("family", "Emit members of the same-reductions family");
    fa_cmd->add_option("state", fa.path, "state file")->required();
    fa_cmd->add_option("--phases", fa.phases, "one phase per certificate row")->delimiter(',');
    fa_cmd->add_option("--sample", fa.sample, "number of random members");
    fa_cmd->add_option("--seed", fa.seed, "sampling seed");
    fa_cmd->add_option("--out-prefix", fa.prefix, "member file prefix");
    fa_cmd->add_option("--out", fa.out, "summary JSON path");
    double fa_tol = 0;
    auto* fa_tol_opt = fa_cmd->add_option("--tol", fa_tol, "tolerance override");

    VerifyArgs ve;
    auto* ve_cmd = app.add_subcommand("verify-reductions", "Compare all (n-1)-party reduced states");
    ve_cmd->add_option("a", ve.a, "first state file")->required();
    ve_cmd->add_option("b", ve.b, "second state file")->required();
    ve_cmd->add_option("--out", ve.out, "JSON path");
    double ve_tol = 0;
    auto* ve_tol_opt = ve_cmd->add_option("--tol", ve_tol, "tolerance override");

    SimArgs si;
    auto* si_cmd = app.add_subcommand("simulate", "Run the one-shot consensus protocol");
    si_cmd->add_option("state", si.path, "state file")->required();
    si_cmd->add_option("--plan", si.plan_path, "explicit measurement plan JSON");
    si_cmd->add_option("--trials", si.trials, "number of trials");
    si_cmd->add_option("--seed", si.seed, "master seed");
    si_cmd->add_option("--fail", si.fail, "fail-stop agents (1-based)")->delimiter(',');
    si_cmd->add_option("--drop", si.drop, "channel drop probability (documented no-op)");
    si_cmd->add_option("--workers", si.workers, "worker threads");
    si_cmd->add_option("--out", si.out, "stats JSON path");
    double si_tol = 0;
    auto* si_tol_opt = si_cmd->add_option("--tol", si_tol, "tolerance override");

    ProbeArgs pr;
    auto* pr_cmd = app.add_subcommand("probe", "Probe disagreement over random measurement plans");
    pr_cmd->add_option("state", pr.path, "state file")->required();
    pr_cmd->add_option("--samples", pr.samples, "number of random plans");
    pr_cmd->add_option("--seed", pr.seed, "sampling seed");
    pr_cmd->add_option("--out", pr.out, "report JSON path");
    double pr_tol = 0;
    auto* pr_tol_opt = pr_cmd->add_option("--tol", pr_tol, "tolerance override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*an_tol_opt) an.tol = an_tol;
        if (*an_pivot_opt) an.pivot = an_pivot;
        if (*fa_tol_opt) fa.tol = fa_tol;
        if (*ve_tol_opt) ve.tol = ve_tol;
        if (*si_tol_opt) si.tol = si_tol;
        if (*pr_tol_opt) pr.tol = pr_tol;
        if (gen_cmd->parsed()) return run_gen(gen);
        if (an_cmd->parsed()) return run_analyze(an);
        if (fa_cmd->parsed()) return run_family(fa);
        if (ve_cmd->parsed()) return run_verify(ve);
        if (si_cmd->parsed()) return run_simulate(si);
        if (pr_cmd->parsed()) return run_probe(pr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
