#include <doctest.h>

#include <cmath>

#include "selfreg/errors.hpp"
#include "selfreg/study.hpp"

using namespace selfreg;

TEST_CASE("type 7 quantiles") {
    const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
    // numpy.quantile defaults
    CHECK(quantile(v, 0.5) == doctest::Approx(3.5));
    CHECK(quantile(v, 0.025) == doctest::Approx(1.0));
    CHECK(quantile(v, 0.975) == doctest::Approx(8.475));
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 9.0);
    CHECK(quantile({7.0}, 0.3) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
    CHECK_THROWS_AS(quantile(v, 1.5), ValidationError);
}

TEST_CASE("summaries") {
    auto cond = SimulationCondition::table(1);
    std::vector<ReplicationRecord> recs(4);
    const double g[] = {0.066, 0.070, 0.0667, 0.050};
    for (int r = 0; r < 4; ++r) {
        auto& rec = recs[r];
        rec.ok = r != 3;
        rec.gamma.estimate = g[r];
        rec.gamma.truth = 1.0 / 15.0;
        rec.gamma.ci = {g[r] - 0.001, g[r] + 0.001};
        rec.yeq_gamma.estimate = 0.01 * (r - 1);
        rec.yeq_gamma.truth = 0.0;
        rec.yeq_gamma.ci = {-1.0, 1.0};
        rec.r2_individual = 0.8;
        rec.r2_fixed = 0.5;
    }
    cond.equilibrium = 0.0;
    const auto s = summarize(cond, DerivativeKind::spline, 0.7, recs);
    CHECK(s.replications == 4);
    CHECK(s.failures == 1);
    CHECK(s.gamma.n == 3);
    CHECK_FALSE(s.gamma.raw);
    CHECK(s.gamma.median == doctest::Approx(100.0 * (0.0667 * 15.0 - 1.0)));
    CHECK(s.gamma.n10 == doctest::Approx(100.0));
    CHECK(s.gamma.coverage == doctest::Approx(200.0 / 3.0));
    CHECK(s.yeq_gamma.raw);
    CHECK(s.yeq_gamma.median == doctest::Approx(0.0));
    // |estimate| below 10% of gamma K = 0.00667 holds for 0.0 only.
    CHECK(s.yeq_gamma.n10 == doctest::Approx(100.0 / 3.0));
    CHECK_FALSE(s.k_gamma.available);
    CHECK(s.median_r2_individual == doctest::Approx(0.8));

    for (auto& r : recs) r.ok = false;
    CHECK_THROWS_AS(summarize(cond, DerivativeKind::spline, 0.7, recs), EstimationError);
}

TEST_CASE("a noiseless single replication is unbiased") {
    auto cond = SimulationCondition::table(1);
    cond.stn = 0.0;
    cond.inter_indiv_sd_pct = 0.0;
    cond.regression = RegressionMethod::ols;
    StudyOptions opt;
    opt.n_reps = 1;
    const auto run = run_condition(cond, DerivativeKind::spline, opt);
    REQUIRE(run.records.size() == 1);
    REQUIRE(run.records[0].ok);
    for (auto p : {Parameter::gamma, Parameter::k_gamma, Parameter::yeq_gamma})
        CHECK(std::abs(run.summary.get(p).median) < 2.0);
}

TEST_CASE("studies are deterministic and policy independent") {
    auto cond = SimulationCondition::table(1);
    cond.n_indiv = 20;
    StudyOptions opt;
    opt.n_reps = 6;
    opt.selection_panels = 2;
    opt.exec = Execution::serial;
    const auto a = run_condition(cond, DerivativeKind::glla, opt);
    opt.exec = Execution::parallel;
    const auto b = run_condition(cond, DerivativeKind::glla, opt);
    REQUIRE(a.records.size() == 6);
    CHECK(a.smoothing.embedding == b.smoothing.embedding);
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(a.records[r].seed == b.records[r].seed);
        CHECK(a.records[r].gamma.estimate == b.records[r].gamma.estimate);
    }
    CHECK(a.summary.gamma.median == b.summary.gamma.median);

    opt.base_seed += 1;
    const auto c = run_condition(cond, DerivativeKind::glla, opt);
    CHECK(c.records[0].gamma.estimate != a.records[0].gamma.estimate);
}

TEST_CASE("fixed smoothing and study crossing") {
    auto cond = SimulationCondition::table(1);
    cond.n_indiv = 10;
    StudyOptions opt;
    opt.n_reps = 2;
    opt.fixed_smoothing = DerivativeSpec::glla(7);
    const auto run = run_condition(cond, DerivativeKind::glla, opt);
    CHECK_FALSE(run.choice.has_value());
    CHECK(run.summary.smoothing == 7.0);
    CHECK_THROWS_AS(run_condition(cond, DerivativeKind::spline, opt), ValidationError);

    opt.fixed_smoothing.reset();
    opt.selection_panels = 1;
    opt.grid.embeddings = {5, 9};
    opt.grid.spars = {0.4, 0.8};
    opt.grid.refine_spar = false;
    auto one = SimulationCondition::table(1);
    one.n_indiv = 10;
    auto bad = one;
    bad.id = 5;
    bad.n_indiv = 1;  // mixed models need two individuals
    const auto runs = run_study({one, bad}, {DerivativeKind::spline, DerivativeKind::glla},
                                {RegressionMethod::lmm, RegressionMethod::gee}, opt);
    CHECK(runs.size() == 8);
    CHECK(runs[0].condition.regression == RegressionMethod::lmm);
    CHECK(runs[2].condition.regression == RegressionMethod::gee);
    CHECK(runs[0].ok());
    CHECK_FALSE(runs[4].ok());
    CHECK_FALSE(runs[7].ok());
}
