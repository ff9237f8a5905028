#include "selfreg/methods.hpp"

#include "selfreg/errors.hpp"

namespace selfreg {

std::string to_string(RegressionMethod m) {
    switch (m) {
        case RegressionMethod::lmm: return "lmm";
        case RegressionMethod::ols: return "ols";
        case RegressionMethod::gee: return "gee";
    }
    return "?";
}

std::string to_string(DerivativeKind k) {
    return k == DerivativeKind::glla ? "glla" : "fda";
}

RegressionMethod parse_regression_method(std::string_view text) {
    if (text == "lmm" || text == "lmer") return RegressionMethod::lmm;
    if (text == "ols" || text == "lm") return RegressionMethod::ols;
    if (text == "gee") return RegressionMethod::gee;
    throw ValidationError("unknown regression method '" + std::string(text) +
                          "' (expected lmm, ols or gee)");
}

DerivativeKind parse_derivative_kind(std::string_view text) {
    if (text == "glla") return DerivativeKind::glla;
    if (text == "fda" || text == "spline") return DerivativeKind::spline;
    throw ValidationError("unknown derivative method '" + std::string(text) +
                          "' (expected fda or glla)");
}

}  // namespace selfreg
