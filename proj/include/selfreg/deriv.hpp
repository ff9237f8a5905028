#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selfreg/methods.hpp"
#include "selfreg/panel.hpp"
#include "selfreg/parallel.hpp"

namespace selfreg {

/// GLLA with adjacent points (lag 1) and first-order local approximation.
struct GllaConfig {
    int embedding = 15;
    /// Time step between successive points; <= 0 means "use the mean spacing".
    double dt = 0.0;
};

struct SplineConfig {
    double spar = 0.73;
    /// When set, bypasses the spar mapping and uses this roughness penalty directly.
    double lambda = -1.0;
};

/// One regression row: window-centred time, smoothed signal, first
/// derivative and excitation, tagged with the individual's position in the panel.
struct DerivativeRow {
    std::size_t group = 0;
    double t_center = 0.0;
    double y_smooth = 0.0;
    double y_dot = 0.0;
    double u_avg = 0.0;
};

struct DerivativeRows {
    std::vector<DerivativeRow> rows;
    std::vector<std::string> warnings;
};

/// W = L (L'L)^{-1}: column 0 holds local-average weights, column 1 local-slope weights.
Eigen::MatrixX2d glla_weights(int embedding, double dt);

DerivativeRows glla_derivatives(std::span<const double> signal, std::span<const double> excitation,
                                std::span<const double> times, const GllaConfig& cfg,
                                std::size_t group = 0);

/// Natural cubic smoothing spline minimising
///   sum (y_i - f(t_i))^2 + lambda * integral f''(t)^2 dt
/// with knots at every observation time (Reinsch form).
class SmoothingSpline {
public:
    SmoothingSpline(std::span<const double> times, std::span<const double> values, double lambda);

    double value(double t) const;
    double derivative(double t) const;

    double lambda() const { return lambda_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& fitted() const { return fitted_; }
    /// In-sample residual sum of squares.
    double rss() const { return rss_; }

private:
    std::size_t interval(double t) const;

    std::vector<double> knots_;
    std::vector<double> fitted_;
    std::vector<double> second_;  // f'' at the knots; zero at both ends
    double lambda_;
    double rss_ = 0.0;
};

/// Roughness penalty for a normalised smoothing parameter in [0, 1]:
/// lambda = r * 256^(3 spar - 1) * range(t)^3, with r the trace ratio
/// tr(X'X) / tr(Omega) of the cubic B-spline basis on the [0, 1]-rescaled
/// abscissa (interior basis functions only).
double spar_to_lambda(std::span<const double> times, double spar);

SmoothingSpline fit_smoothing_spline(std::span<const double> times, std::span<const double> values,
                                     const SplineConfig& cfg);

DerivativeRows spline_derivatives(std::span<const double> signal,
                                  std::span<const double> excitation,
                                  std::span<const double> times, const SplineConfig& cfg,
                                  std::size_t group = 0);

/// Hyperparameter of the first step.
struct DerivativeSpec {
    DerivativeKind kind = DerivativeKind::spline;
    int embedding = 15;
    double spar = 0.73;

    static DerivativeSpec glla(int d) { return {DerivativeKind::glla, d, 0.0}; }
    static DerivativeSpec spline(double spar) { return {DerivativeKind::spline, 0, spar}; }
    /// d for GLLA, spar for the spline.
    double hyperparameter() const;
    std::string describe() const;
};

/// Per-individual derivative estimation, pooled in panel order.
DerivativeRows derive_panel(const Panel& panel, const DerivativeSpec& spec,
                            Execution exec = Execution::parallel);

}  // namespace selfreg
