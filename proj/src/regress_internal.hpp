#pragma once

#include "selfreg/regress.hpp"

namespace selfreg::detail {

/// Fills se and the 95% Wald interval from coef and coef_cov.
void attach_wald(RegressionFit& fit);

/// Throws EstimationError naming the first column in the span of the preceding ones.
void check_full_rank(const RegressionInput& in);

/// Per-group row indices.
std::vector<std::vector<Eigen::Index>> rows_by_group(const RegressionInput& in);

}  // namespace selfreg::detail
