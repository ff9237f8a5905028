#include <doctest.h>

#include <cmath>
#include <vector>

#include "selfreg/errors.hpp"
#include "selfreg/model.hpp"
#include "selfreg/simulate.hpp"

using namespace selfreg;

namespace {

// Fixed-step RK4 on the forced system with a linearly interpolated excitation.
std::vector<double> rk4(const FirstOrderParams& p, const std::vector<double>& u_times,
                        const std::vector<double>& u, const std::vector<double>& out_times, double h) {
    auto u_at = [&](double t) {
        if (t >= u_times.back()) return u.back();
        std::size_t k = 0;
        while (u_times[k + 1] <= t) ++k;
        const double w = (t - u_times[k]) / (u_times[k + 1] - u_times[k]);
        return (1 - w) * u[k] + w * u[k + 1];
    };
    auto f = [&](double t, double y) {
        return -p.decay_rate * (y - p.equilibrium) + p.decay_rate * p.gain * u_at(t);
    };
    std::vector<double> out;
    double t = out_times.front(), y = p.initial_value;
    out.push_back(y);
    for (std::size_t k = 1; k < out_times.size(); ++k) {
        const auto steps = static_cast<long>(std::lround((out_times[k] - t) / h));
        for (long s = 0; s < steps; ++s) {
            const double k1 = f(t, y);
            const double k2 = f(t + h / 2, y + h / 2 * k1);
            const double k3 = f(t + h / 2, y + h / 2 * k2);
            const double k4 = f(t + h, y + h * k3);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            t += h;
        }
        t = out_times[k];
        out.push_back(y);
    }
    return out;
}

}  // namespace

TEST_CASE("homogeneous solution covers 63% of its change after one decay time") {
    const auto p = FirstOrderParams::from_decay_time(10.0, 1.0, 0.0, 1.0);
    CHECK(solve_homogeneous(p, 10.0) == doctest::Approx(0.36787944117144233).epsilon(1e-14));
    CHECK(solve_homogeneous(p, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("step response") {
    auto p = FirstOrderParams::from_decay_time(5.0, 1.0, 0.0, 0.0);
    CHECK(solve_step(p, 1.0, 1e6) == doctest::Approx(1.0).epsilon(1e-12));
    p.gain = 2.0;
    CHECK(solve_step(p, 1.0, 5.0) == doctest::Approx(1.2642411176571153).epsilon(1e-14));

    const std::vector<double> times{0.0, 5.0};
    const auto traj = integrate(p, ExcitationSignal{{0.0, 5.0}, {1.0, 1.0}}, times);
    CHECK(traj.values[1] == doctest::Approx(1.2642411176571153).epsilon(1e-12));
}

TEST_CASE("one-step propagators") {
    const auto p = FirstOrderParams::from_decay_time(10.0, 1.0, 0.0, 0.0);
    CHECK(propagate_hold(0.0, 1.0, 1.0, p) == doctest::Approx(0.09516258196404048).epsilon(1e-14));
    // A flat ramp is a hold.
    CHECK(propagate_ramp(0.3, 0.7, 0.7, 2.0, p) == doctest::Approx(propagate_hold(0.3, 0.7, 2.0, p)));

    // Ramp against RK4.
    const auto ref = rk4(p, {0.0, 2.0}, {0.0, 1.0}, {0.0, 2.0}, 1e-3);
    CHECK(propagate_ramp(0.0, 0.0, 1.0, 2.0, p) == doctest::Approx(ref[1]).epsilon(1e-10));
}

TEST_CASE("integration of the reference excitation matches RK4") {
    const auto cond = SimulationCondition::table(1);
    std::vector<double> times(50);
    for (int i = 0; i < 50; ++i) times[i] = i;
    const auto u = make_excitation(cond.shape, 50);
    const FirstOrderParams p{1.0 / 15.0, 1.0, 0.5, 0.5};
    const auto exact = integrate(p, ExcitationSignal{times, u}, times).values;
    const auto ref = rk4(p, times, u, times, 1e-3);
    double worst = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i)
        worst = std::max(worst, std::abs(exact[i] - ref[i]) / std::abs(ref[i]));
    CHECK(worst <= 1e-6);
}

TEST_CASE("zero-order hold is piecewise constant") {
    const auto p = FirstOrderParams::from_decay_time(4.0, 2.0, 0.0, 0.0);
    ExcitationSignal u{{0.0, 3.0, 6.0}, {1.0, 0.0, 0.0}, ExcitationHold::zero_order};
    CHECK(u.at(2.9) == 1.0);
    const auto traj = integrate(p, u, std::vector<double>{0.0, 3.0});
    CHECK(traj.values[1] == doctest::Approx(2.0 * (1.0 - std::exp(-0.75))).epsilon(1e-13));
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(FirstOrderParams::from_decay_time(0.0, 1.0, 0.0, 0.0), InvalidParameter);
    FirstOrderParams p;
    p.decay_rate = -0.1;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p.decay_rate = 0.1;
    p.gain = NAN;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    ExcitationSignal u{{0.0, 1.0}, {1.0, 1.0}};
    CHECK_THROWS(integrate(FirstOrderParams{}, u, std::vector<double>{0.0, 2.0}));
}
