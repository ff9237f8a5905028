#include "selfreg/regress.hpp"

#include <cmath>
#include <set>

#include "regress_internal.hpp"
#include "selfreg/errors.hpp"

namespace selfreg {

RegressionInput RegressionInput::from_rows(const DerivativeRows& rows, bool homogeneous) {
    RegressionInput in;
    const auto n = static_cast<Eigen::Index>(rows.rows.size());
    const Eigen::Index p = homogeneous ? 2 : 3;
    in.response.resize(n);
    in.design.resize(n, p);
    in.group.resize(rows.rows.size());
    in.names = homogeneous ? std::vector<std::string>{"intercept", "y"}
                           : std::vector<std::string>{"intercept", "y", "u"};
    std::size_t max_group = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows.rows[static_cast<std::size_t>(i)];
        in.response(i) = r.y_dot;
        in.design(i, 0) = 1.0;
        in.design(i, 1) = r.y_smooth;
        if (!homogeneous) in.design(i, 2) = r.u_avg;
        in.group[static_cast<std::size_t>(i)] = r.group;
        max_group = std::max(max_group, r.group);
    }
    in.n_groups = rows.rows.empty() ? 0 : max_group + 1;
    return in;
}

Eigen::Index RegressionInput::column(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return static_cast<Eigen::Index>(k);
    return -1;
}

RegressionInput RegressionInput::without_column(const std::string& name) const {
    const auto drop = column(name);
    if (drop < 0) return *this;
    RegressionInput out;
    out.response = response;
    out.group = group;
    out.n_groups = n_groups;
    out.design.resize(design.rows(), design.cols() - 1);
    for (Eigen::Index k = 0, c = 0; k < design.cols(); ++k) {
        if (k == drop) continue;
        out.design.col(c++) = design.col(k);
        out.names.push_back(names[static_cast<std::size_t>(k)]);
    }
    return out;
}

void RegressionInput::validate() const {
    const auto n = response.size();
    if (design.rows() != n || static_cast<Eigen::Index>(group.size()) != n)
        throw ValidationError("regression input has inconsistent row counts");
    if (static_cast<Eigen::Index>(names.size()) != design.cols())
        throw ValidationError("regression input needs one name per design column");
    if (n < design.cols() + 1)
        throw ValidationError("regression needs at least " + std::to_string(design.cols() + 1) +
                              " rows, got " + std::to_string(n));
    if (!response.allFinite() || !design.allFinite())
        throw ValidationError("regression input contains non-finite values");
    for (auto g : group)
        if (g >= n_groups) throw ValidationError("group index out of range");
}

Eigen::Index RegressionFit::column(const std::string& name) const {
    for (std::size_t k = 0; k < names.size(); ++k)
        if (names[k] == name) return static_cast<Eigen::Index>(k);
    return -1;
}

double RegressionFit::coef_of(const std::string& name) const {
    const auto k = column(name);
    if (k < 0) throw std::out_of_range("no coefficient named '" + name + "'");
    return coef(k);
}

namespace detail {

void attach_wald(RegressionFit& fit) {
    fit.se = fit.coef_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.ci_lower = fit.coef - kWaldZ * fit.se;
    fit.ci_upper = fit.coef + kWaldZ * fit.se;
}

void check_full_rank(const RegressionInput& in) {
    constexpr double tol = 1e-10;
    for (Eigen::Index j = 0; j < in.design.cols(); ++j) {
        const Eigen::VectorXd col = in.design.col(j);
        const double norm = col.norm();
        bool collinear = norm == 0.0;
        if (!collinear && j > 0) {
            const Eigen::MatrixXd prev = in.design.leftCols(j);
            const Eigen::VectorXd coef = prev.colPivHouseholderQr().solve(col);
            collinear = (col - prev * coef).norm() <= tol * norm;
        }
        if (collinear) {
            const auto& name = in.names[static_cast<std::size_t>(j)];
            throw EstimationError(
                "design matrix is rank deficient: predictor '" + name + "' is " +
                (norm == 0.0 ? std::string("identically zero")
                             : "collinear with the preceding columns") +
                (name == "u" ? " (no excitation in the data; consider the homogeneous model)" : ""));
        }
    }
}

std::vector<std::vector<Eigen::Index>> rows_by_group(const RegressionInput& in) {
    std::vector<std::vector<Eigen::Index>> out(in.n_groups);
    for (std::size_t i = 0; i < in.group.size(); ++i)
        out[in.group[i]].push_back(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace detail

RegressionFit fit_ols(const RegressionInput& input) {
    input.validate();
    detail::check_full_rank(input);
    RegressionFit fit;
    fit.method = RegressionMethod::ols;
    fit.names = input.names;
    const auto& X = input.design;
    const auto qr = X.colPivHouseholderQr();
    fit.coef = qr.solve(input.response);
    const Eigen::VectorXd resid = input.response - X * fit.coef;
    const double rss = resid.squaredNorm();
    const auto dof = static_cast<double>(X.rows() - X.cols());
    fit.residual_variance = rss / dof;
    fit.objective = rss;
    const Eigen::MatrixXd xtx = X.transpose() * X;
    fit.coef_cov = fit.residual_variance * xtx.ldlt().solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    detail::attach_wald(fit);
    return fit;
}

RegressionFit fit_regression(const RegressionInput& input, RegressionMethod method) {
    switch (method) {
        case RegressionMethod::ols: return fit_ols(input);
        case RegressionMethod::lmm: return fit_lmm(input);
        case RegressionMethod::gee: return fit_gee(input);
    }
    throw ValidationError("unknown regression method");
}

RegressionFit fit_homogeneous(const RegressionInput& input, RegressionMethod method) {
    return fit_regression(input.without_column("u"), method);
}

}  // namespace selfreg
