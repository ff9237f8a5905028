#include "selfreg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "selfreg/errors.hpp"

namespace selfreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Trajectory reconstruct(const Individual& ind, double rate, double gain, double equilibrium) {
    const FirstOrderParams params{rate, gain, equilibrium, ind.signal.front()};
    return integrate(params, ind.excitation_signal(), ind.times);
}

}  // namespace

double r_squared(std::span<const Trajectory> estimate, const Panel& panel, R2Target target) {
    if (estimate.size() != panel.individuals.size())
        throw ValidationError("one reconstruction per individual is required for R^2");
    auto series = [&](const Individual& ind) -> const std::vector<double>& {
        if (target == R2Target::observed) return ind.signal;
        if (ind.signal_true.size() != ind.size())
            throw ValidationError("noiseless signal unavailable for individual '" + ind.id + "'");
        return ind.signal_true;
    };
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < estimate.size(); ++j) {
        if (estimate[j].values.empty()) continue;
        const auto& ind = panel.individuals[j];
        if (estimate[j].values.size() != ind.size())
            throw ValidationError("reconstruction and panel grids differ for individual '" + ind.id + "'");
        for (double v : series(ind)) sum += v;
        count += ind.size();
    }
    if (count == 0) throw EstimationError("R^2 is undefined: no reconstructed individuals");
    const double mean = sum / static_cast<double>(count);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t j = 0; j < estimate.size(); ++j) {
        if (estimate[j].values.empty()) continue;
        const auto& y = series(panel.individuals[j]);
        for (std::size_t i = 0; i < y.size(); ++i) {
            ss_res += (y[i] - estimate[j].values[i]) * (y[i] - estimate[j].values[i]);
            ss_tot += (y[i] - mean) * (y[i] - mean);
        }
    }
    if (!(ss_tot > 0.0)) throw EstimationError("R^2 is undefined: the target has zero variance");
    return 1.0 - ss_res / ss_tot;
}

FitResult two_step_fit(const Panel& panel, const DerivativeSpec& derivative,
                       RegressionMethod method, bool homogeneous, Execution exec) {
    panel.validate();
    FitResult out;
    out.derivative = derivative;
    out.method = method;
    out.homogeneous = homogeneous;

    auto rows = derive_panel(panel, derivative, exec);
    out.warnings = std::move(rows.warnings);
    out.n_rows = rows.rows.size();
    const auto input = RegressionInput::from_rows(rows, homogeneous);
    out.regression = fit_regression(input, method);
    for (const auto& w : out.regression.warnings) out.warnings.push_back(w);

    const auto& reg = out.regression;
    const auto i0 = reg.column("intercept"), i1 = reg.column("y"), i2 = reg.column("u");
    const double b0 = reg.coef(i0), b1 = reg.coef(i1), b2 = homogeneous ? 0.0 : reg.coef(i2);
    out.gamma = -b1;
    out.se_gamma = reg.se(i1);
    out.gamma_ci = {-reg.ci_upper(i1), -reg.ci_lower(i1)};
    out.yeq_gamma = b0;
    out.se_yeq_gamma = reg.se(i0);
    out.yeq_gamma_ci = {reg.ci_lower(i0), reg.ci_upper(i0)};
    if (homogeneous) {
        out.k_gamma = out.se_k_gamma = kNaN;
        out.k_gamma_ci = {kNaN, kNaN};
    } else {
        out.k_gamma = b2;
        out.se_k_gamma = reg.se(i2);
        out.k_gamma_ci = {reg.ci_lower(i2), reg.ci_upper(i2)};
    }
    out.decay_time = 1.0 / out.gamma;
    out.gain = homogeneous ? kNaN : b2 / out.gamma;
    out.equilibrium = b0 / out.gamma;

    const auto n = panel.individuals.size();
    out.individuals.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double u0 = 0.0, u1 = 0.0, u2 = 0.0;
        if (reg.has_random_effects()) {
            const auto r = static_cast<Eigen::Index>(j);
            u0 = reg.random_effects(r, i0);
            u1 = reg.random_effects(r, i1);
            if (!homogeneous) u2 = reg.random_effects(r, i2);
        }
        auto& est = out.individuals[j];
        est.id = panel.individuals[j].id;
        const double slope = b1 + u1;
        if (std::abs(slope) < 1e-8) {
            est.decay_rate = est.decay_time = est.gain = est.equilibrium = kNaN;
            continue;
        }
        est.decay_rate = -slope;
        est.decay_time = 1.0 / est.decay_rate;
        est.gain = homogeneous ? kNaN : (b2 + u2) / est.decay_rate;
        est.equilibrium = (b0 + u0) / est.decay_rate;
        est.valid = est.decay_rate > 0.0 && std::isfinite(est.equilibrium);
    }

    out.fixed_reconstruction.assign(n, Trajectory{});
    out.individual_reconstruction.assign(n, Trajectory{});
    const bool fixed_ok = out.gamma > 0.0 && std::isfinite(out.equilibrium);
    if (!fixed_ok)
        out.warnings.push_back("estimated fixed decay rate is not positive; no reconstruction");
    for_each_index(n, exec, [&](std::size_t j) {
        const auto& ind = panel.individuals[j];
        const double gain = homogeneous ? 0.0 : out.gain;
        if (fixed_ok)
            out.fixed_reconstruction[j] = reconstruct(ind, out.gamma, gain, out.equilibrium);
        const auto& est = out.individuals[j];
        if (est.valid)
            out.individual_reconstruction[j] = reconstruct(
                ind, est.decay_rate, homogeneous ? 0.0 : est.gain, est.equilibrium);
    });
    for (const auto& est : out.individuals) out.n_excluded += !est.valid;
    if (out.n_excluded > 0)
        out.warnings.push_back(std::to_string(out.n_excluded) +
                               " individual(s) with non-positive or undefined decay rate excluded "
                               "from individual reconstructions");

    const bool any_individual = out.n_excluded < n;
    out.r2_fixed_observed = fixed_ok ? r_squared(out.fixed_reconstruction, panel, R2Target::observed)
                                     : kNaN;
    if (panel.has_truth()) {
        out.r2_fixed_true = fixed_ok ? r_squared(out.fixed_reconstruction, panel, R2Target::noiseless)
                                     : kNaN;
        out.r2_individual_true =
            any_individual ? r_squared(out.individual_reconstruction, panel, R2Target::noiseless)
                           : kNaN;
    }
    return out;
}

SmoothingGrid SmoothingGrid::defaults() {
    SmoothingGrid g;
    for (int d = 3; d <= 25; d += 2) g.embeddings.push_back(d);
    for (int k = 0; k <= 5; ++k) g.spars.push_back(0.2 * k);
    return g;
}

SmoothingChoice optimize_smoothing(std::span<const Panel> panels, DerivativeKind kind,
                                   RegressionMethod method, bool homogeneous,
                                   const SmoothingGrid& grid, Execution exec) {
    if (panels.empty()) throw ValidationError("no panels given for the smoothing search");
    std::vector<DerivativeSpec> specs;
    if (kind == DerivativeKind::glla)
        for (int d : grid.embeddings) specs.push_back(DerivativeSpec::glla(d));
    else
        for (double s : grid.spars) specs.push_back(DerivativeSpec::spline(s));
    if (specs.empty()) throw ValidationError("smoothing grid is empty");

    std::vector<SmoothingTracePoint> trace;
    auto evaluate = [&](const std::vector<DerivativeSpec>& batch) {
        const std::size_t np = panels.size();
        std::vector<SmoothingTracePoint> cells(batch.size() * np);
        for_each_index(cells.size(), exec, [&](std::size_t idx) {
            auto& pt = cells[idx];
            const auto& spec = batch[idx / np];
            try {
                const auto fit =
                    two_step_fit(panels[idx % np], spec, method, homogeneous, Execution::serial);
                pt.gamma = fit.gamma;
                pt.k_gamma = fit.k_gamma;
                pt.yeq_gamma = fit.yeq_gamma;
                pt.r2 = fit.r2_fixed_observed;
                pt.ok = std::isfinite(pt.r2);
                if (!pt.ok) pt.error = "reconstruction unavailable";
            } catch (const std::exception& e) {
                pt.error = e.what();
            }
        });
        std::vector<SmoothingTracePoint> points(batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k) {
            auto& pt = points[k];
            pt.hyperparameter = batch[k].hyperparameter();
            pt.ok = true;
            for (std::size_t i = 0; i < np; ++i) {
                const auto& cell = cells[k * np + i];
                if (!cell.ok) {
                    pt.ok = false;
                    if (pt.error.empty()) pt.error = cell.error;
                    continue;
                }
                pt.gamma += cell.gamma / static_cast<double>(np);
                pt.k_gamma += cell.k_gamma / static_cast<double>(np);
                pt.yeq_gamma += cell.yeq_gamma / static_cast<double>(np);
                pt.r2 += cell.r2 / static_cast<double>(np);
            }
            if (!pt.ok) pt.r2 = pt.gamma = pt.k_gamma = pt.yeq_gamma = std::nan("");
        }
        trace.insert(trace.end(), points.begin(), points.end());
    };
    auto pick = [&]() -> const SmoothingTracePoint* {
        std::stable_sort(trace.begin(), trace.end(), [](const auto& a, const auto& b) {
            return a.hyperparameter < b.hyperparameter;
        });
        const SmoothingTracePoint* best = nullptr;
        for (const auto& pt : trace)
            if (pt.ok && (!best || pt.r2 > best->r2)) best = &pt;
        return best;
    };

    evaluate(specs);
    const SmoothingTracePoint* best = pick();
    if (best && kind == DerivativeKind::spline && grid.refine_spar) {
        const double center = best->hyperparameter;
        std::vector<DerivativeSpec> extra;
        for (int k = 0; k <= 11; ++k) {
            const double s = k / 11.0;
            if (std::abs(s - center) >= 0.2 + 1e-12) continue;
            const bool seen = std::any_of(trace.begin(), trace.end(), [&](const auto& pt) {
                return std::abs(pt.hyperparameter - s) < 1e-9;
            });
            if (!seen) extra.push_back(DerivativeSpec::spline(s));
        }
        evaluate(extra);
        best = pick();
    }
    if (!best) {
        std::ostringstream msg;
        msg << "every smoothing grid point failed:";
        for (const auto& pt : trace) msg << "\n  " << pt.hyperparameter << ": " << pt.error;
        throw EstimationError(msg.str());
    }

    SmoothingChoice choice;
    choice.best = kind == DerivativeKind::glla
                      ? DerivativeSpec::glla(static_cast<int>(std::lround(best->hyperparameter)))
                      : DerivativeSpec::spline(best->hyperparameter);
    choice.r2 = best->r2;
    choice.trace = std::move(trace);
    return choice;
}

SmoothingChoice optimize_smoothing(const Panel& panel, DerivativeKind kind, RegressionMethod method,
                                   bool homogeneous, const SmoothingGrid& grid, Execution exec) {
    return optimize_smoothing(std::span<const Panel>(&panel, 1), kind, method, homogeneous, grid,
                              exec);
}

}  // namespace selfreg
