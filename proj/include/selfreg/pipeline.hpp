#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfreg/deriv.hpp"
#include "selfreg/model.hpp"
#include "selfreg/panel.hpp"
#include "selfreg/parallel.hpp"
#include "selfreg/regress.hpp"

namespace selfreg {

/// What a reconstruction is compared against.
enum class R2Target { observed, noiseless };

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Per-individual parameters from fixed effects plus conditional modes.
struct IndividualEstimate {
    std::string id;
    double decay_rate = 0.0;
    double decay_time = 0.0;
    double gain = 0.0;
    double equilibrium = 0.0;
    /// False when |b1 + u1j| is ~0 or the implied decay rate is not positive.
    bool valid = false;
};

struct FitResult {
    DerivativeSpec derivative;
    RegressionMethod method = RegressionMethod::lmm;
    bool homogeneous = false;
    RegressionFit regression;
    std::size_t n_rows = 0;

    // Regression-scale fixed parameters: gamma = -b1, K gamma = b2, y_eq gamma = b0.
    double gamma = 0.0;
    double k_gamma = 0.0;  // NaN for the homogeneous model
    double yeq_gamma = 0.0;
    double se_gamma = 0.0, se_k_gamma = 0.0, se_yeq_gamma = 0.0;
    Interval gamma_ci, k_gamma_ci, yeq_gamma_ci;

    // Back-transformed fixed parameters.
    double decay_time = 0.0;
    double gain = 0.0;
    double equilibrium = 0.0;

    std::vector<IndividualEstimate> individuals;
    std::size_t n_excluded = 0;

    /// Fixed-effect and per-individual reconstructions, aligned with the
    /// panel's individuals. Excluded individuals have empty trajectories.
    std::vector<Trajectory> fixed_reconstruction;
    std::vector<Trajectory> individual_reconstruction;

    double r2_fixed_observed = 0.0;  // smoothing-selection criterion
    std::optional<double> r2_fixed_true;       // R2g (simulated panels)
    std::optional<double> r2_individual_true;  // R2r (simulated panels)

    std::vector<std::string> warnings;

    bool has_gain() const { return !homogeneous; }
};

/// Derivative estimation, pooled regression, back-transformation and
/// reconstruction. Reconstructions start from each individual's first
/// observed value.
FitResult two_step_fit(const Panel& panel, const DerivativeSpec& derivative,
                       RegressionMethod method, bool homogeneous = false,
                       Execution exec = Execution::parallel);

/// Pooled 1 - SS_res / SS_tot over every individual with a non-empty
/// estimate; SS_tot is taken about the grand mean of the target.
double r_squared(std::span<const Trajectory> estimate, const Panel& panel, R2Target target);

/// Values are means over the selection panels; a point is usable only when
/// every panel fitted.
struct SmoothingTracePoint {
    double hyperparameter = 0.0;
    bool ok = false;
    double r2 = 0.0;
    double gamma = 0.0;
    double k_gamma = 0.0;
    double yeq_gamma = 0.0;
    std::string error;
};

struct SmoothingGrid {
    std::vector<int> embeddings;  // GLLA
    std::vector<double> spars;    // spline, first pass
    /// Second spline pass over the k/11 lattice within +-0.2 of the first-pass winner.
    bool refine_spar = true;

    static SmoothingGrid defaults();
};

struct SmoothingChoice {
    DerivativeSpec best;
    double r2 = 0.0;
    std::vector<SmoothingTracePoint> trace;  // sorted by hyperparameter
};

/// Grid search maximising the R^2 between the fixed-effect reconstruction and
/// the observed (noisy) signal, averaged over `panels`. Ties go to the
/// smallest hyperparameter.
SmoothingChoice optimize_smoothing(std::span<const Panel> panels, DerivativeKind kind,
                                   RegressionMethod method, bool homogeneous,
                                   const SmoothingGrid& grid = SmoothingGrid::defaults(),
                                   Execution exec = Execution::parallel);
SmoothingChoice optimize_smoothing(const Panel& panel, DerivativeKind kind, RegressionMethod method,
                                   bool homogeneous, const SmoothingGrid& grid = SmoothingGrid::defaults(),
                                   Execution exec = Execution::parallel);

}  // namespace selfreg
