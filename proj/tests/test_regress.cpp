#include <doctest.h>

#include <cmath>

#include "selfreg/errors.hpp"
#include "selfreg/model.hpp"
#include "selfreg/nelder_mead.hpp"
#include "selfreg/regress.hpp"
#include "selfreg/rng.hpp"

using namespace selfreg;

namespace {

// Groups of n rows with columns intercept, x, u; y = b0 + b1_j x + b2 u + e.
RegressionInput grouped(int groups, int n, double slope_sd, double noise_sd, std::uint64_t seed) {
    Rng rng(seed);
    RegressionInput in;
    const int rows = groups * n;
    in.response.resize(rows);
    in.design.resize(rows, 3);
    in.names = {"intercept", "y", "u"};
    in.n_groups = static_cast<std::size_t>(groups);
    for (int g = 0; g < groups; ++g) {
        const double b1 = rng.normal(-1.0 / 15.0, slope_sd);
        for (int i = 0; i < n; ++i) {
            const int r = g * n + i;
            const double x = 10.0 * rng.uniform();
            const double u = (i / 5) % 2;
            in.design.row(r) << 1.0, x, u;
            in.response(r) = 0.03 + b1 * x + 0.07 * u + rng.normal(0.0, noise_sd);
            in.group.push_back(static_cast<std::size_t>(g));
        }
    }
    return in;
}

}  // namespace

TEST_CASE("least squares recovers the rearranged model from exact derivatives") {
    const FirstOrderParams p{1.0 / 15.0, 1.3, 0.5, 0.2};
    std::vector<double> t(50), u(50);
    for (int i = 0; i < 50; ++i) {
        t[i] = i;
        u[i] = (i >= 10 && i < 20) || (i >= 30 && i < 40) ? 1.0 : 0.0;
    }
    const auto y = integrate(p, ExcitationSignal{t, u}, t).values;
    DerivativeRows rows;
    for (int i = 0; i < 50; ++i) {
        const double dy = -p.decay_rate * (y[i] - p.equilibrium) + p.decay_rate * p.gain * u[i];
        rows.rows.push_back({0, t[i], y[i], dy, u[i]});
    }
    const auto fit = fit_ols(RegressionInput::from_rows(rows));
    CHECK(std::abs(fit.coef_of("intercept") - p.decay_rate * p.equilibrium) <= 1e-8);
    CHECK(std::abs(fit.coef_of("y") + p.decay_rate) <= 1e-8);
    CHECK(std::abs(fit.coef_of("u") - p.decay_rate * p.gain) <= 1e-8);
    CHECK(fit.ci_lower(1) <= fit.coef(1));
    CHECK(fit.coef(1) <= fit.ci_upper(1));
}

TEST_CASE("ordinary least squares") {
    auto in = grouped(5, 20, 0.0, 0.01, 3);
    const auto fit = fit_ols(in);
    const Eigen::VectorXd beta = (in.design.transpose() * in.design).ldlt().solve(in.design.transpose() * in.response);
    CHECK((fit.coef - beta).norm() <= 1e-10);
    const Eigen::VectorXd res = in.response - in.design * beta;
    const double s2 = res.squaredNorm() / static_cast<double>(in.response.size() - 3);
    CHECK(fit.residual_variance == doctest::Approx(s2).epsilon(1e-10));
    const Eigen::MatrixXd cov = s2 * (in.design.transpose() * in.design).inverse();
    for (int k = 0; k < 3; ++k) {
        CHECK(fit.se(k) == doctest::Approx(std::sqrt(cov(k, k))).epsilon(1e-8));
        CHECK(fit.ci_upper(k) - fit.coef(k) == doctest::Approx(kWaldZ * fit.se(k)).epsilon(1e-12));
    }

    in.design.col(2) = in.design.col(0);
    CHECK_THROWS_AS(fit_ols(in), EstimationError);
}

TEST_CASE("a mixed model without between-group variation equals least squares") {
    // Identical groups leave no between-group variance, so the optimum sits on the boundary.
    const auto one = grouped(1, 30, 0.0, 0.02, 17);
    RegressionInput in;
    const int groups = 20;
    in.names = one.names;
    in.n_groups = groups;
    in.response.resize(30 * groups);
    in.design.resize(30 * groups, 3);
    for (int g = 0; g < groups; ++g) {
        in.response.segment(30 * g, 30) = one.response;
        in.design.middleRows(30 * g, 30) = one.design;
        for (int i = 0; i < 30; ++i) in.group.push_back(static_cast<std::size_t>(g));
    }
    const auto ols = fit_ols(in);
    const auto lmm = fit_lmm(in);
    for (int k = 0; k < 3; ++k)
        CHECK(std::abs(lmm.coef(k) - ols.coef(k)) <= 1e-4 * std::max(1.0, std::abs(ols.coef(k))));
    CHECK(lmm.random_cov.norm() <= 1e-6);
}

TEST_CASE("mixed model recovers a random slope") {
    const double slope_sd = 0.2 / 15.0;
    const auto in = grouped(50, 50, slope_sd, 0.05, 2019);
    const auto fit = fit_lmm(in);
    CHECK(fit.converged);
    CHECK(std::abs(fit.coef_of("y") + 1.0 / 15.0) <= 3.0 * fit.se(1));
    CHECK(std::abs(std::sqrt(fit.random_cov(1, 1)) - slope_sd) <= 0.3 * slope_sd);
    CHECK(fit.random_effects.rows() == 50);

    const LmmProblem problem(in);
    const double best = problem.deviance(fit.theta);
    CHECK(best == doctest::Approx(fit.objective).epsilon(1e-9));
    Rng rng(5);
    for (int probe = 0; probe < 100; ++probe) {
        std::vector<double> theta(problem.n_theta());
        for (auto& v : theta) v = rng.normal(0.0, 1.0);
        CHECK(best <= problem.deviance(theta) + 1e-9);
    }
}

TEST_CASE("mixed model preconditions") {
    const auto in = grouped(1, 40, 0.0, 0.05, 1);
    CHECK_THROWS_AS(fit_lmm(in), ValidationError);
    CHECK_THROWS_AS(fit_gee(in), ValidationError);
}

TEST_CASE("GEE with an independence working correlation equals least squares") {
    const auto in = grouped(30, 20, 0.01, 0.05, 77);
    GeeOptions opt;
    opt.fixed_correlation = 0.0;
    const auto gee = fit_gee(in, opt);
    const auto ols = fit_ols(in);
    CHECK((gee.coef - ols.coef).cwiseAbs().maxCoeff() <= 1e-8);

    const auto exch = fit_gee(in);
    CHECK(exch.working_correlation > 0.0);
    CHECK(exch.working_correlation < 1.0);
    CHECK(std::abs(exch.coef_of("y") + 1.0 / 15.0) <= 3.0 * exch.se(1));
}

TEST_CASE("homogeneous fit drops the excitation") {
    const auto in = grouped(10, 20, 0.0, 0.05, 8);
    const auto fit = fit_homogeneous(in, RegressionMethod::ols);
    CHECK(fit.column("u") == -1);
    CHECK(fit.coef.size() == 2);
    const auto reduced = in.without_column("u");
    CHECK((fit.coef - fit_ols(reduced).coef).norm() <= 1e-12);
}

TEST_CASE("Nelder-Mead") {
    auto rosen = [](const std::vector<double>& x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
    };
    NelderMeadOptions opt;
    opt.max_iterations = 5000;
    opt.rel_tol = 1e-14;
    const auto r = nelder_mead(rosen, {-1.2, 1.0}, opt);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-3));

    auto bowl = [](const std::vector<double>& x) { return std::pow(x[0] - 3, 2) + 2 * std::pow(x[1] + 1, 2); };
    const auto b = nelder_mead(bowl, {0.0, 0.0});
    CHECK(b.value <= 1e-6);
}
