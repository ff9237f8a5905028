#include <doctest.h>

#include <cmath>
#include <numeric>

#include "selfreg/errors.hpp"
#include "selfreg/rng.hpp"
#include "selfreg/simulate.hpp"

using namespace selfreg;

namespace {

std::vector<int> ones(const std::vector<double>& u) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u[i] == 1.0) idx.push_back(static_cast<int>(i));
        else CHECK(u[i] == 0.0);
    return idx;
}

}  // namespace

TEST_CASE("excitation shapes") {
    SUBCASE("one step") {
        const auto idx = ones(make_excitation(ExcitationShape::one_step(), 50));
        REQUIRE(idx.size() == 15);
        CHECK(idx.front() == 10);
        CHECK(idx.back() == 24);
    }
    SUBCASE("two steps") {
        const auto idx = ones(make_excitation(ExcitationShape::two_steps(), 50));
        std::vector<int> expected(10);
        std::iota(expected.begin(), expected.end(), 10);
        for (int i = 30; i < 40; ++i) expected.push_back(i);
        CHECK(idx == expected);
    }
    SUBCASE("pulse trains are isolated and equally spaced") {
        for (int k : {3, 5, 10}) {
            const auto idx = ones(make_excitation(ExcitationShape::pulse_train(k), 50));
            REQUIRE(idx.size() == static_cast<std::size_t>(k));
            for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] - idx[i - 1] >= 2);
            if (k == 3) CHECK(idx[1] - idx[0] == idx[2] - idx[1]);
        }
    }
    SUBCASE("shape names") {
        CHECK(ExcitationShape::parse("3pnt").pulses == 3);
        CHECK(ExcitationShape::parse("2steps").kind == ShapeKind::two_steps);
        CHECK(ExcitationShape::parse("pulses10").name() == "pulses10");
        CHECK_THROWS_AS(ExcitationShape::parse("sine"), ValidationError);
        CHECK_THROWS_AS(ExcitationShape::pulse_train(4), ValidationError);
    }
    CHECK_THROWS_AS(make_excitation(ExcitationShape::two_steps(), 10), ValidationError);
}

TEST_CASE("random streams") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 10; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        CHECK(x != c.normal());
    }
    CHECK(derive_seed({1, 2, 3}) == derive_seed({1, 2, 3}));
    CHECK(derive_seed({1, 2, 3}) != derive_seed({1, 3, 2}));
    CHECK(derive_seed({1, 2}) != derive_seed({1, 2, 0}));

    Rng r(7);
    double sum = 0, sum2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal(2.0, 3.0);
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::sqrt(sum2 / n - mean * mean) == doctest::Approx(3.0).epsilon(0.01));
}

TEST_CASE("individual parameter draws") {
    Rng rng(2024);
    const auto mean = FirstOrderParams::from_decay_time(15.0, 1.0, 0.5, 0.5);
    const int n = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const auto p = draw_individual_params(mean, 20.0, rng);
        CHECK_FALSE(p.decay_time() <= 1.0);
        CHECK(p.initial_value == p.equilibrium);
        s += p.decay_time();
        s2 += p.decay_time() * p.decay_time();
    }
    const double m = s / n;
    CHECK(std::abs(m - 15.0) < 0.1);
    CHECK(std::abs(std::sqrt(s2 / n - m * m) - 3.0) < 0.1);

    const auto fixed = draw_individual_params(mean, 0.0, rng);
    CHECK(fixed.decay_rate == mean.decay_rate);
    CHECK(fixed.gain == mean.gain);
}

TEST_CASE("reference panel") {
    const auto cond = SimulationCondition::table(1);
    const auto panel = generate_panel(cond, 11);
    REQUIRE(panel.individuals.size() == 50);
    CHECK(panel.n_observations() == 2500);
    CHECK(panel.has_truth());
    CHECK_NOTHROW(panel.validate());
    for (const auto& ind : panel.individuals) {
        CHECK(ind.size() == 50);
        CHECK(ind.excitation == panel.individuals.front().excitation);
        CHECK(ind.signal_true.front() == ind.truth->initial_value);
    }
}

TEST_CASE("noise amplitude is a percentage of each individual's range") {
    auto cond = SimulationCondition::table(1);
    cond.n_indiv = 2000;
    const auto panel = generate_panel(cond, 5);
    double ss = 0, range_sum = 0;
    std::size_t n = 0;
    for (const auto& ind : panel.individuals) {
        const auto [lo, hi] = std::minmax_element(ind.signal_true.begin(), ind.signal_true.end());
        range_sum += *hi - *lo;
        for (std::size_t i = 0; i < ind.size(); ++i) {
            const double e = ind.signal[i] - ind.signal_true[i];
            ss += e * e;
            ++n;
        }
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    const double expected = 0.30 * range_sum / static_cast<double>(panel.individuals.size());
    CHECK(std::abs(sd - expected) < 0.05 * expected);
}

TEST_CASE("panels are reproducible and independent of the execution policy") {
    const auto cond = SimulationCondition::table(6);
    const auto a = generate_panel(cond, 99, Execution::serial);
    const auto b = generate_panel(cond, 99, Execution::parallel);
    const auto c = generate_panel(cond, 100, Execution::serial);
    REQUIRE(a.individuals.size() == b.individuals.size());
    for (std::size_t j = 0; j < a.individuals.size(); ++j) {
        CHECK(a.individuals[j].signal == b.individuals[j].signal);
        CHECK(a.individuals[j].truth->decay_rate == b.individuals[j].truth->decay_rate);
    }
    CHECK(a.individuals[0].signal != c.individuals[0].signal);
}

TEST_CASE("condition table") {
    CHECK(SimulationCondition::table(2).decay_rate == doctest::Approx(0.2));
    CHECK(SimulationCondition::table(9).n_obs == 30);
    CHECK(SimulationCondition::table(12).equilibrium == 0.0);
    CHECK(SimulationCondition::table(16).regression == RegressionMethod::gee);
    CHECK(SimulationCondition::table(17).homogeneous);
    CHECK(SimulationCondition::all_table_conditions().size() == 17);
    CHECK_THROWS_AS(SimulationCondition::table(18), ValidationError);
    auto bad = SimulationCondition::table(1);
    bad.stn = -1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}
