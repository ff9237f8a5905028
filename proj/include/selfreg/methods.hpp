#pragma once

#include <string>
#include <string_view>

namespace selfreg {

enum class RegressionMethod { lmm, ols, gee };

/// Derivative estimator of the first step: GLLA time embedding or the
/// penalised cubic smoothing spline ("fda").
enum class DerivativeKind { glla, spline };

std::string to_string(RegressionMethod m);
std::string to_string(DerivativeKind k);

/// Accepts "lmm"/"lmer", "ols"/"lm", "gee". Throws ValidationError otherwise.
RegressionMethod parse_regression_method(std::string_view text);
/// Accepts "glla", "fda"/"spline".
DerivativeKind parse_derivative_kind(std::string_view text);

}  // namespace selfreg
