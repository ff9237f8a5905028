#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "selfreg/deriv.hpp"
#include "selfreg/methods.hpp"

namespace selfreg {

/// Pooled second-step data: derivative response, fixed-effect design
/// (intercept, signal, excitation) and the individual each row belongs to.
/// Every fixed-effect column also carries a random effect in the mixed model.
struct RegressionInput {
    Eigen::VectorXd response;
    Eigen::MatrixXd design;
    std::vector<std::size_t> group;
    std::size_t n_groups = 0;
    std::vector<std::string> names;

    /// Columns "intercept", "y", "u" (without "u" when homogeneous).
    static RegressionInput from_rows(const DerivativeRows& rows, bool homogeneous = false);

    RegressionInput without_column(const std::string& name) const;
    Eigen::Index column(const std::string& name) const;  // -1 when absent
    void validate() const;
};

struct RegressionFit {
    RegressionMethod method = RegressionMethod::ols;
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::MatrixXd coef_cov;
    Eigen::VectorXd ci_lower;
    Eigen::VectorXd ci_upper;
    double residual_variance = 0.0;

    // Mixed model only.
    Eigen::MatrixXd random_cov;      // q x q
    Eigen::MatrixXd random_effects;  // n_groups x q conditional modes
    std::vector<double> theta;       // relative covariance factor at the optimum
    bool boundary = false;

    double working_correlation = 0.0;  // GEE only
    double objective = 0.0;            // REML deviance (lmm) or RSS (ols, gee)
    int iterations = 0;
    bool converged = true;
    std::vector<std::string> warnings;

    bool has_random_effects() const { return random_effects.size() > 0; }
    Eigen::Index column(const std::string& name) const;  // -1 when absent
    double coef_of(const std::string& name) const;
};

/// 95% normal quantile used for all Wald intervals.
inline constexpr double kWaldZ = 1.959963984540054;

RegressionFit fit_ols(const RegressionInput& input);

struct LmmOptions {
    int max_iterations = 2000;
    double rel_tol = 1e-8;
    /// Nelder-Mead restarts from the current optimum; guards against the
    /// simplex collapsing early.
    int restarts = 2;
};

/// Profiled REML criterion for a full q x q random-effect covariance.
/// Columns are centred and scaled internally; theta holds the lower
/// triangle (column-major) of the relative covariance factor on that scale.
class LmmProblem {
public:
    explicit LmmProblem(const RegressionInput& input);

    std::size_t n_theta() const { return q_ * (q_ + 1) / 2; }
    double deviance(const std::vector<double>& theta) const;
    /// Starting point from the spread of per-individual least-squares fits
    /// relative to their pooled residual variance; falls back to diagonal
    /// relative variances of 0.1 when fewer than two individuals allow it.
    std::vector<double> initial_theta() const;
    /// Estimates (in the caller's original column scale) at theta.
    RegressionFit evaluate(const std::vector<double>& theta) const;

private:
    struct Solution;
    Solution solve(const std::vector<double>& theta) const;

    std::size_t q_ = 0;
    std::size_t n_ = 0;
    std::size_t n_groups_ = 0;
    std::vector<std::string> names_;
    Eigen::MatrixXd to_original_;  // beta = T beta_scaled
    std::vector<Eigen::MatrixXd> gram_;  // Z_j'Z_j (scaled)
    std::vector<Eigen::VectorXd> cross_;  // Z_j'y_j
    std::vector<double> yy_;
    std::vector<std::size_t> counts_;
};

RegressionFit fit_lmm(const RegressionInput& input, const LmmOptions& options = {});

struct GeeOptions {
    int max_iterations = 100;
    double tol = 1e-10;
    /// Fix the exchangeable correlation instead of estimating it.
    std::optional<double> fixed_correlation;
};

RegressionFit fit_gee(const RegressionInput& input, const GeeOptions& options = {});

RegressionFit fit_regression(const RegressionInput& input, RegressionMethod method);

/// Drops the excitation column and fits the homogeneous model.
RegressionFit fit_homogeneous(const RegressionInput& input, RegressionMethod method);

}  // namespace selfreg
