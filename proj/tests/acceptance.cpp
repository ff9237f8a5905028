// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "selfreg/deriv.hpp"
#include "selfreg/model.hpp"
#include "selfreg/pipeline.hpp"
#include "selfreg/regress.hpp"
#include "selfreg/rng.hpp"
#include "selfreg/simulate.hpp"
#include "selfreg/study.hpp"

using namespace selfreg;

namespace {

// Pinned tolerances.
constexpr int kReps = 100;
constexpr int kSweepReps = 50;
constexpr int kSelectionPanels = 10;
constexpr double kC1GammaLo = -8.0, kC1GammaHi = 7.0;
constexpr double kC1KLo = -2.0, kC1KHi = 12.0;
constexpr double kC1N10 = 80.0;
constexpr double kC1R2Lo = 0.70, kC1R2Hi = 0.90;
constexpr double kC2KLo = 9.0, kC2KHi = 25.0;
constexpr double kC3Gamma = -60.0;
constexpr double kC4GllaN10 = 60.0;
constexpr double kC5Rk4 = 1e-6, kC5Diff = 1e-12, kC5Linear = 1e-10, kC5Interp = 1e-8, kC5Lmm = 1e-4,
                 kC5Gee = 1e-8;
constexpr double kC6Gamma = 0.02, kC6Gain = 0.03, kC6Eq = 0.03;
constexpr double kC7Coverage = 20.0;
constexpr double kC8PlateauSlack = 0.005;
constexpr int kC8Pairs = 20;
constexpr double kC8Share = 0.70;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s | %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

StudyOptions options(int reps) {
    StudyOptions o;
    o.n_reps = reps;
    o.selection_panels = kSelectionPanels;
    return o;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

// Criterion 5 oracles.
double rk4_error() {
    std::vector<double> t(50);
    for (int i = 0; i < 50; ++i) t[i] = i;
    const auto u = make_excitation(ExcitationShape::two_steps(), 50);
    const FirstOrderParams p{1.0 / 15.0, 1.0, 0.5, 0.5};
    const auto exact = integrate(p, ExcitationSignal{t, u}, t).values;
    auto u_at = [&](double s) {
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(s), 48);
        const double w = s - static_cast<double>(k);
        return (1 - w) * u[k] + w * u[k + 1];
    };
    auto f = [&](double s, double y) { return -p.decay_rate * (y - p.equilibrium) + p.decay_rate * p.gain * u_at(s); };
    const double h = 1e-3;
    double y = p.initial_value, worst = 0.0;
    for (int i = 1; i < 50; ++i) {
        double s = i - 1;
        for (int k = 0; k < 1000; ++k) {
            const double k1 = f(s, y), k2 = f(s + h / 2, y + h / 2 * k1), k3 = f(s + h / 2, y + h / 2 * k2),
                         k4 = f(s + h, y + h * k3);
            y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            s += h;
        }
        worst = std::max(worst, std::abs(exact[i] - y) / std::abs(y));
    }
    return worst;
}

double glla_difference_error() {
    std::vector<double> t(30), y(30), u(30, 0.0);
    for (int i = 0; i < 30; ++i) {
        t[i] = 0.5 * i;
        y[i] = std::exp(0.1 * i) * std::sin(i);
    }
    const auto rows = glla_derivatives(y, u, t, {2, 0.0}).rows;
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        worst = std::max(worst, std::abs(rows[i].y_dot - (y[i + 1] - y[i]) / 0.5));
    return worst;
}

double linear_error() {
    std::vector<double> t(40), y(40), u(40, 1.0);
    for (int i = 0; i < 40; ++i) {
        t[i] = 0.25 * i;
        y[i] = 1.5 + 0.4 * t[i];
    }
    double worst = 0.0;
    for (int d : {2, 5, 15})
        for (const auto& r : glla_derivatives(y, u, t, {d, 0.0}).rows) worst = std::max(worst, std::abs(r.y_dot - 0.4));
    for (double spar : {0.0, 0.73, 1.0})
        for (const auto& r : spline_derivatives(y, u, t, {spar, -1.0}).rows)
            worst = std::max(worst, std::abs(r.y_dot - 0.4));
    return worst;
}

double interpolation_error() {
    const std::vector<double> t{0.0, 0.7, 1.5, 2.0, 3.1, 4.0, 5.5, 6.0};
    const std::vector<double> y{1.0, -0.3, 2.2, 0.4, 0.9, -1.0, 0.5, 0.1};
    const SmoothingSpline s(t, y, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, std::abs(s.value(t[i]) - y[i]));
    return worst;
}

RegressionInput replicated_groups(int groups) {
    Rng rng(17);
    const int n = 30;
    Eigen::VectorXd y(n);
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) {
        const double a = 10 * rng.uniform(), b = (i / 5) % 2;
        x.row(i) << 1.0, a, b;
        y(i) = 0.03 - a / 15.0 + 0.07 * b + rng.normal(0.0, 0.02);
    }
    RegressionInput in;
    in.names = {"intercept", "y", "u"};
    in.n_groups = static_cast<std::size_t>(groups);
    in.response.resize(n * groups);
    in.design.resize(n * groups, 3);
    for (int g = 0; g < groups; ++g) {
        in.response.segment(n * g, n) = y;
        in.design.middleRows(n * g, n) = x;
        for (int i = 0; i < n; ++i) in.group.push_back(static_cast<std::size_t>(g));
    }
    return in;
}

RegressionInput clustered(int groups) {
    Rng rng(29);
    RegressionInput in;
    const int n = 20;
    in.names = {"intercept", "y", "u"};
    in.n_groups = static_cast<std::size_t>(groups);
    in.response.resize(n * groups);
    in.design.resize(n * groups, 3);
    for (int g = 0; g < groups; ++g) {
        const double shift = rng.normal(0.0, 0.05);
        for (int i = 0; i < n; ++i) {
            const int r = g * n + i;
            const double a = 10 * rng.uniform(), b = (i / 5) % 2;
            in.design.row(r) << 1.0, a, b;
            in.response(r) = shift - a / 15.0 + 0.07 * b + rng.normal(0.0, 0.05);
            in.group.push_back(static_cast<std::size_t>(g));
        }
    }
    return in;
}

double max_coef_gap(const RegressionFit& a, const RegressionFit& b, bool relative) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < a.coef.size(); ++k) {
        const double scale = relative ? std::max(1.0, std::abs(b.coef(k))) : 1.0;
        worst = std::max(worst, std::abs(a.coef(k) - b.coef(k)) / scale);
    }
    return worst;
}

void criterion5() {
    const double rk4 = rk4_error(), diff = glla_difference_error(), lin = linear_error(),
                 interp = interpolation_error();
    const auto rep = replicated_groups(20);
    const double lmm = max_coef_gap(fit_lmm(rep), fit_ols(rep), true);
    const auto cl = clustered(30);
    GeeOptions indep;
    indep.fixed_correlation = 0.0;
    const double gee = max_coef_gap(fit_gee(cl, indep), fit_ols(cl), false);
    const bool pass = rk4 <= kC5Rk4 && diff <= kC5Diff && lin <= kC5Linear && interp <= kC5Interp &&
                      lmm <= kC5Lmm && gee <= kC5Gee;
    char buf[400];
    std::snprintf(buf, sizeof buf,
                  "(a) rk4 rel %.2e <= %.0e; (b) d=2 vs difference %.2e <= %.0e; (c) linear %.2e <= %.0e; "
                  "(d) interpolation %.2e <= %.0e; (e) lmm-ols %.2e <= %.0e; (f) gee-ols %.2e <= %.0e",
                  rk4, kC5Rk4, diff, kC5Diff, lin, kC5Linear, interp, kC5Interp, lmm, kC5Lmm, gee, kC5Gee);
    report(5, pass, buf);
}

void criterion6() {
    auto cond = SimulationCondition::table(1);
    cond.stn = 0.0;
    cond.inter_indiv_sd_pct = 0.0;
    const auto panel = generate_panel(cond, 606);
    const auto choice = optimize_smoothing(panel, DerivativeKind::spline, cond.regression, false);
    const auto fit = two_step_fit(panel, choice.best, cond.regression);
    const double eg = std::abs(fit.gamma / cond.decay_rate - 1), ek = std::abs(fit.gain / cond.gain - 1),
                 ey = std::abs(fit.equilibrium / cond.equilibrium - 1);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: |rel err| gamma %.4f <= %.2f, K %.4f <= %.2f, y_eq %.4f <= %.2f",
                  choice.best.describe().c_str(), eg, kC6Gamma, ek, kC6Gain, ey, kC6Eq);
    report(6, eg <= kC6Gamma && ek <= kC6Gain && ey <= kC6Eq, buf);
}

void criteria_1_2_7() {
    const auto cond = SimulationCondition::table(1);
    const auto fda = run_condition(cond, DerivativeKind::spline, options(kReps)).summary;
    const bool g_ok = within(fda.gamma.median, kC1GammaLo, kC1GammaHi);
    const bool k_ok = within(fda.k_gamma.median, kC1KLo, kC1KHi);
    const bool n_ok = fda.gamma.n10 >= kC1N10;
    const bool r_ok = within(fda.median_r2_individual, kC1R2Lo, kC1R2Hi);
    char buf[400];
    std::snprintf(buf, sizeof buf,
                  "fda+lmm spar %.4f, %d reps: gamma bias %.2f%% in [%g, %g] %s; k_gamma bias %.2f%% in [%g, %g] %s; "
                  "N10(gamma) %.1f >= %g %s; R2r %.3f in [%.2f, %.2f] %s",
                  fda.smoothing, kReps, fda.gamma.median, kC1GammaLo, kC1GammaHi, g_ok ? "ok" : "miss",
                  fda.k_gamma.median, kC1KLo, kC1KHi, k_ok ? "ok" : "miss", fda.gamma.n10, kC1N10,
                  n_ok ? "ok" : "miss", fda.median_r2_individual, kC1R2Lo, kC1R2Hi, r_ok ? "ok" : "miss");
    report(1, g_ok && k_ok && n_ok && r_ok, buf);

    const auto glla = run_condition(cond, DerivativeKind::glla, options(kReps)).summary;
    const bool sign = glla.k_gamma.median > 0.0;
    const bool soft = within(glla.k_gamma.median, kC2KLo, kC2KHi);
    std::snprintf(buf, sizeof buf, "glla+lmm d=%g: k_gamma bias %.2f%% > 0 %s; in [%g, %g] %s (soft)",
                  glla.smoothing, glla.k_gamma.median, sign ? "ok" : "miss", kC2KLo, kC2KHi, soft ? "ok" : "miss");
    report(2, sign, buf);

    std::snprintf(buf, sizeof buf, "fda+lmm k_gamma CI coverage %.1f%% < %g%%", fda.k_gamma.coverage, kC7Coverage);
    report(7, fda.k_gamma.coverage < kC7Coverage, buf);
}

void criterion3() {
    const auto cond = SimulationCondition::table(17);
    const auto s = run_condition(cond, DerivativeKind::spline, options(kReps)).summary;
    report(3, s.gamma.median <= kC3Gamma,
           "homogeneous fda spar " + fmt("%.4f", s.smoothing) + ": gamma bias " + fmt("%.2f%%", s.gamma.median) +
               " <= " + fmt("%g%%", kC3Gamma));
}

void criterion4() {
    // Conditions with decay rates 1/5, 1/10, 1/15, 1/20.
    const int ids[] = {2, 3, 1, 4};
    const char* labels[] = {"1/5", "1/10", "1/15", "1/20"};
    double glla_n10[4], fda_n10[4];
    for (int k = 0; k < 4; ++k) {
        const auto cond = SimulationCondition::table(ids[k]);
        glla_n10[k] = run_condition(cond, DerivativeKind::glla, options(kSweepReps)).summary.gamma.n10;
        fda_n10[k] = run_condition(cond, DerivativeKind::spline, options(kSweepReps)).summary.gamma.n10;
    }
    bool glla_ok = true;
    std::string detail = "glla N10(gamma)";
    for (int k = 0; k < 4; ++k) {
        glla_ok = glla_ok && glla_n10[k] >= kC4GllaN10;
        detail += std::string(" ") + labels[k] + "=" + fmt("%.0f", glla_n10[k]);
    }
    detail += " (all >= " + fmt("%g", kC4GllaN10) + ") " + (glla_ok ? "ok" : "miss") + "; fda N10(gamma)";
    for (int k = 0; k < 4; ++k) detail += std::string(" ") + labels[k] + "=" + fmt("%.0f", fda_n10[k]);
    const bool fda_ok = fda_n10[0] < fda_n10[2];
    detail += std::string(" (1/5 < 1/15) ") + (fda_ok ? "ok" : "miss");
    report(4, glla_ok && fda_ok, detail);
}

void criterion8() {
    const auto cond = SimulationCondition::table(1);
    const auto panel = generate_panel(cond, derive_seed({808, 0}));
    SmoothingGrid coarse = SmoothingGrid::defaults();
    coarse.refine_spar = false;
    const auto trace = optimize_smoothing(panel, DerivativeKind::spline, cond.regression, false, coarse).trace;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < trace.size(); ++i)
        if (trace[i].ok && trace[i].r2 > trace[peak].r2) peak = i;
    bool shape = peak > 0 && peak + 1 < trace.size();
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (!trace[i].ok || !trace[i - 1].ok) shape = false;
        else if (i <= peak) shape = shape && trace[i].r2 >= trace[i - 1].r2 - kC8PlateauSlack;
        else shape = shape && trace[i].r2 <= trace[i - 1].r2 + kC8PlateauSlack;
    }
    shape = shape && trace.back().r2 < trace[peak].r2 && trace.front().r2 < trace[peak].r2;
    std::string curve;
    for (const auto& pt : trace) curve += fmt(" %.3f", pt.r2);

    int ordered = 0;
    auto lo = cond, hi = cond;
    lo.stn = 10.0;
    hi.stn = 50.0;
    for (int pair = 0; pair < kC8Pairs; ++pair) {
        const auto seed = derive_seed({808, 1, static_cast<std::uint64_t>(pair)});
        const auto a = optimize_smoothing(generate_panel(lo, seed), DerivativeKind::spline, cond.regression, false);
        const auto b = optimize_smoothing(generate_panel(hi, seed), DerivativeKind::spline, cond.regression, false);
        ordered += a.best.spar <= b.best.spar;
    }
    const bool order = ordered >= kC8Share * kC8Pairs;
    report(8, shape && order,
           "R2 over spar 0..1 step 0.2:" + curve + " peak interior, rise/fall within " + fmt("%g", kC8PlateauSlack) +
               (shape ? " ok" : " miss") + "; spar(stn 10) <= spar(stn 50) in " + std::to_string(ordered) + "/" +
               std::to_string(kC8Pairs) + " pairs (>= " + fmt("%.0f%%", 100 * kC8Share) + ")" +
               (order ? " ok" : " miss"));
}

void guarded(const std::vector<int>& ids, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        for (int id : ids) report(id, false, std::string("error: ") + e.what());
    }
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    guarded({5}, criterion5);
    guarded({6}, criterion6);
    guarded({1, 2, 7}, criteria_1_2_7);
    guarded({3}, criterion3);
    guarded({4}, criterion4);
    guarded({8}, criterion8);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of 8 criteria failed (%.0f s)\n", failures, secs);
    return failures;
}
