#pragma once

#include <stdexcept>
#include <string>

namespace selfreg {

/// Bad model parameters (non-finite values, non-positive decay rate, ...).
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed inputs: grids, panels, configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Estimation could not produce a result (rank deficiency, degenerate data).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative fit stopped before meeting its convergence criterion.
class ConvergenceError : public EstimationError {
public:
    ConvergenceError(const std::string& what, double best_objective)
        : EstimationError(what), best_objective_(best_objective) {}

    double best_objective() const noexcept { return best_objective_; }

private:
    double best_objective_;
};

/// File-system failures (unreadable input, unwritable output).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace selfreg
