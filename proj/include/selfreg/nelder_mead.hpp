#pragma once

#include <functional>
#include <vector>

namespace selfreg {

struct NelderMeadOptions {
    int max_iterations = 500;
    /// Stop when (f_worst - f_best) <= rel_tol * max(|f_best|, 1).
    double rel_tol = 1e-8;
    /// Initial simplex edge along each coordinate.
    double initial_step = 0.1;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free downhill simplex minimisation (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {});

}  // namespace selfreg
