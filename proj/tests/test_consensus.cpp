#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qmarg/consensus.hpp"
#include "qmarg/states.hpp"
#include "qmarg/tensor.hpp"

using namespace qmarg;

namespace {

MeasurementPlan computational_qubit_plan(int n) {
    MeasurementPlan plan;
    plan.dims.assign(n, 2);
    for (int i = 0; i < n; ++i) {
        Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
        p0(0, 0) = 1;
        p1(1, 1) = 1;
        plan.outcomes.push_back({Projector::from_matrix(p0), Projector::from_matrix(p1)});
        plan.labels.push_back({1, 2});
    }
    return plan;
}

SchmidtProjectorSet certificate_of(const StateVector& s) {
    AnalysisReport rep = analyze(s);
    REQUIRE(rep.verdict == Verdict::undetermined);
    return *rep.certificate;
}

}  // namespace

TEST_CASE("consensus plan for the cat state has no bottom outcome") {
    StateVector cat = ghz(3);
    MeasurementPlan plan = build_consensus_measurements(cat, certificate_of(cat));
    REQUIRE(plan.agents() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(plan.outcomes[i].size() == 2);  // full support, complement empty
        CHECK(plan.labels[i] == std::vector<int>{1, 2});
    }
    CHECK(plan.complete());
}

TEST_CASE("rank-deficient supports get an explicit bottom projector") {
    StateVector s = completely_correlated({3, 3, 3}, {0.6, 0.4});
    MeasurementPlan plan = build_consensus_measurements(s, certificate_of(s));
    for (int i = 0; i < 3; ++i) {
        REQUIRE(plan.labels[i] == std::vector<int>{0, 1, 2});
        Mat expect_bottom = Mat::Zero(3, 3);
        expect_bottom(2, 2) = 1;
        CHECK((plan.outcomes[i][0].matrix - expect_bottom).norm() < 1e-10);
    }
    CHECK(plan.complete());
}

TEST_CASE("coarse certificates give mixed-rank outcomes") {
    StateVector s = completely_correlated({3, 3, 3}, {0.5, 0.3, 0.2});
    SchmidtProjectorSet coarse = construct_projectors(s, 0, {{0, 1}, {2}});
    MeasurementPlan plan = build_consensus_measurements(s, coarse);
    for (int i = 0; i < 3; ++i) {
        REQUIRE(plan.outcomes[i].size() == 2);  // full support again
        CHECK(plan.outcomes[i][0].rank == 2);
        CHECK(plan.outcomes[i][1].rank == 1);
    }
}

TEST_CASE("unverifiable certificates are rejected") {
    StateVector s = completely_correlated({3, 3, 3}, {0.5, 0.3, 0.2});
    SchmidtProjectorSet broken = certificate_of(s);
    broken.rows[0][1] = broken.rows[1][1];
    CHECK_THROWS(build_consensus_measurements(s, broken));
}

TEST_CASE("exact distribution of the cat state is the two constant tuples") {
    StateVector cat = ghz(3);
    MeasurementPlan plan = build_consensus_measurements(cat, certificate_of(cat));
    auto table = joint_outcome_distribution(cat, plan);
    REQUIRE(table.size() == 2);
    for (const auto& [labels, p] : table) {
        CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(labels[0] == labels[1]);
        CHECK(labels[1] == labels[2]);
        CHECK(labels[0] != 0);
    }
    CHECK(all_agreeing(table));
}

TEST_CASE("frozen computational tables for product and single-excitation states") {
    MeasurementPlan plan = computational_qubit_plan(3);

    auto product = joint_outcome_distribution(product_state({2, 2, 2}, {0, 0, 0}), plan);
    REQUIRE(product.size() == 1);
    CHECK(product.at({1, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(all_agreeing(product));

    auto w = joint_outcome_distribution(w_state(3), plan);
    REQUIRE(w.size() == 3);
    CHECK(w.at({1, 1, 2}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(w.at({1, 2, 1}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(w.at({2, 1, 1}) == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK_FALSE(all_agreeing(w));
}

TEST_CASE("distribution is independent of the sampling order") {
    StateVector s = completely_correlated({3, 3, 3}, {0.5, 0.3, 0.2});
    MeasurementPlan plan = build_consensus_measurements(s, certificate_of(s));
    auto forward = joint_outcome_distribution(s, plan);
    auto backward = joint_outcome_distribution(s, plan, {}, {2, 0, 1});
    REQUIRE(forward.size() == backward.size());
    for (const auto& [labels, p] : forward) CHECK(backward.at(labels) == doctest::Approx(p).epsilon(1e-12));
    CHECK_THROWS(joint_outcome_distribution(s, plan, {}, {0, 0, 1}));
}

TEST_CASE("cat-state trials always agree, under any fault configuration") {
    StateVector cat = ghz(3);
    MeasurementPlan plan = build_consensus_measurements(cat, certificate_of(cat));

    SimConfig base_config;
    base_config.trials = 4000;
    base_config.seed = 99;
    TrialStats base = run_trials(cat, plan, base_config);
    CHECK(base.agreement_frequency == 1.0);
    long total = 0;
    for (const auto& [labels, c] : base.outcome_counts) {
        total += c;
        CHECK((labels == std::vector<int>{1, 1, 1} || labels == std::vector<int>{2, 2, 2}));
    }
    CHECK(total == base_config.trials);
    long histogram_total = 0;
    for (const auto& [v, c] : base.consensus_value_histogram) {
        CHECK((v == 1 || v == 2));
        histogram_total += c;
    }
    CHECK(histogram_total == base_config.trials);

    // Fail-stop sets and channel drops cannot change anything: identical
    // seeds give identical physical outcomes.
    for (const auto& fail : std::vector<std::vector<int>>{{0}, {1}, {0, 2}}) {
        for (double drop : {0.0, 0.5, 1.0}) {
            SimConfig config = base_config;
            config.failed_agents = fail;
            config.drop_probability = drop;
            TrialStats stats = run_trials(cat, plan, config);
            CHECK(stats.agreement_frequency == 1.0);
            CHECK(stats.outcome_counts == base.outcome_counts);
        }
    }
}

TEST_CASE("computational measurement of the single-excitation state never agrees") {
    SimConfig config;
    config.trials = 2000;
    config.seed = 5;
    TrialStats stats = run_trials(w_state(3), computational_qubit_plan(3), config);
    CHECK(stats.agreement_frequency == 0.0);
    CHECK(stats.consensus_value_histogram.empty());
}

TEST_CASE("trial statistics are reproducible and worker-count invariant") {
    StateVector s = completely_correlated({3, 3, 3}, {0.5, 0.3, 0.2});
    MeasurementPlan plan = build_consensus_measurements(s, certificate_of(s));
    SimConfig config;
    config.trials = 3000;
    config.seed = 31337;

    TrialStats one = run_trials(s, plan, config);
    config.workers = 2;
    TrialStats two = run_trials(s, plan, config);
    config.workers = 8;
    TrialStats eight = run_trials(s, plan, config);
    CHECK(one.outcome_counts == two.outcome_counts);
    CHECK(one.outcome_counts == eight.outcome_counts);
    CHECK(one.agreement_frequency == eight.agreement_frequency);
}

TEST_CASE("empirical frequencies sit within three sigma of the exact table") {
    StateVector s = completely_correlated({3, 3, 3}, {0.5, 0.3, 0.2});
    MeasurementPlan plan = build_consensus_measurements(s, certificate_of(s));
    SimConfig config;
    config.trials = 10000;
    config.seed = 424242;
    TrialStats stats = run_trials(s, plan, config);
    double exact_total = 0;
    for (const auto& [labels, p] : stats.exact_distribution) {
        exact_total += p;
        const auto it = stats.outcome_counts.find(labels);
        const double freq = it == stats.outcome_counts.end()
                                ? 0.0
                                : static_cast<double>(it->second) / static_cast<double>(config.trials);
        const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(config.trials));
        CHECK(std::abs(freq - p) <= 3 * sigma);
    }
    CHECK(exact_total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("config validation rejects nonsense") {
    StateVector cat = ghz(3);
    MeasurementPlan plan = build_consensus_measurements(cat, certificate_of(cat));
    SimConfig config;
    config.trials = 0;
    CHECK_THROWS(run_trials(cat, plan, config));
    config.trials = 1;
    config.drop_probability = 1.5;
    CHECK_THROWS(run_trials(cat, plan, config));
    config.drop_probability = 0;
    config.failed_agents = {5};
    CHECK_THROWS(run_trials(cat, plan, config));
}

TEST_CASE("necessity probe separates determined from undetermined states") {
    ProbeReport w = necessity_probe(w_state(3), 120, 17);
    CHECK_FALSE(w.structurally_excluded);
    CHECK(w.samples_run == 120);
    REQUIRE(w.min_random_disagreement.has_value());
    CHECK(*w.min_random_disagreement > 0.01);
    CHECK_FALSE(w.certificate_disagreement.has_value());

    ProbeReport cat = necessity_probe(ghz(3), 40, 17);
    REQUIRE(cat.certificate_disagreement.has_value());
    CHECK(*cat.certificate_disagreement == 0.0);
    REQUIRE(cat.min_disagreement.has_value());
    CHECK(*cat.min_disagreement == 0.0);

    ProbeReport product = necessity_probe(product_state({2, 2, 2}, {0, 0, 0}), 50, 3);
    CHECK(product.structurally_excluded);
    CHECK(product.excluded_parties == std::vector<int>{0, 1, 2});
    CHECK(product.samples_run == 0);
    CHECK_FALSE(product.min_random_disagreement.has_value());
}

TEST_CASE("plans loaded with a bottom outcome never fire it on the state") {
    StateVector s = completely_correlated({3, 3, 3}, {0.6, 0.4});
    MeasurementPlan plan = build_consensus_measurements(s, certificate_of(s));
    auto table = joint_outcome_distribution(s, plan);
    for (const auto& [labels, p] : table) {
        (void)p;
        for (int v : labels) CHECK(v != 0);
    }
}
