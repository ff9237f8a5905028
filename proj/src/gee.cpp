#include <cmath>
#include <sstream>

#include "regress_internal.hpp"
#include "selfreg/errors.hpp"

namespace selfreg {

// Gaussian GEE, identity link, exchangeable working correlation.
// V_j = phi [(1 - alpha) I + alpha 11'], with the closed-form inverse
// V_j^{-1} = [I - c_j 11'] / (phi (1 - alpha)), c_j = alpha / (1 + (n_j - 1) alpha).
RegressionFit fit_gee(const RegressionInput& input, const GeeOptions& options) {
    input.validate();
    if (input.n_groups < 2)
        throw ValidationError("GEE needs at least 2 individuals, got " +
                              std::to_string(input.n_groups) + "; use the ols regression instead");
    detail::check_full_rank(input);
    const auto& X = input.design;
    const auto& y = input.response;
    const auto p = X.cols();
    const auto groups = detail::rows_by_group(input);

    std::vector<Eigen::MatrixXd> Xg(groups.size());
    std::vector<Eigen::VectorXd> yg(groups.size());
    std::size_t max_size = 0;
    double pairs = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& idx = groups[g];
        Xg[g] = X(idx, Eigen::all);
        yg[g] = y(idx);
        max_size = std::max(max_size, idx.size());
        pairs += 0.5 * static_cast<double>(idx.size()) * static_cast<double>(idx.size() - (idx.empty() ? 0 : 1));
    }
    const double n = static_cast<double>(y.size());

    // weighted pieces of X_j' V_j^{-1} (.) without the phi (1 - alpha) factor
    auto vinv_apply = [](const Eigen::MatrixXd& M, double c) -> Eigen::MatrixXd {
        Eigen::RowVectorXd colsum = M.colwise().sum();
        Eigen::MatrixXd out = M;
        out.rowwise() -= c * colsum;
        return out;
    };

    Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
    double alpha = options.fixed_correlation.value_or(0.0);
    double phi = 1.0;
    std::ostringstream trace;
    bool converged = false;
    int iter = 0;
    Eigen::MatrixXd bread(p, p);
    for (; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd resid = y - X * beta;
        phi = resid.squaredNorm() / (n - static_cast<double>(p));
        if (!options.fixed_correlation) {
            double cross = 0.0;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const Eigen::VectorXd e = resid(groups[g]);
                const double s = e.sum();
                cross += 0.5 * (s * s - e.squaredNorm());
            }
            const double denom = phi * (pairs - static_cast<double>(p));
            alpha = denom > 0.0 ? cross / denom : 0.0;
            const double lower = max_size > 1 ? -1.0 / static_cast<double>(max_size - 1) + 1e-8 : -0.99;
            alpha = std::clamp(alpha, lower, 0.999);
        }
        Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(p, p);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double c = alpha / (1.0 + (static_cast<double>(groups[g].size()) - 1.0) * alpha);
            const Eigen::MatrixXd WX = vinv_apply(Xg[g], c);
            lhs.noalias() += Xg[g].transpose() * WX;
            rhs.noalias() += WX.transpose() * yg[g];
        }
        const Eigen::VectorXd next = lhs.ldlt().solve(rhs);
        const double step = (next - beta).norm();
        trace << "iter " << iter + 1 << ": alpha=" << alpha << " |dbeta|=" << step << "\n";
        beta = next;
        bread = lhs;
        if (step <= options.tol * std::max(1.0, beta.norm())) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("GEE did not converge in " + std::to_string(options.max_iterations) +
                                   " iterations:\n" + trace.str(),
                               (y - X * beta).squaredNorm());

    // Sandwich: B^{-1} (sum X_j'V_j^{-1} e_j e_j' V_j^{-1} X_j) B^{-1}; phi (1 - alpha) cancels.
    const Eigen::VectorXd resid = y - X * beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double c = alpha / (1.0 + (static_cast<double>(groups[g].size()) - 1.0) * alpha);
        const Eigen::VectorXd score = vinv_apply(Xg[g], c).transpose() * resid(groups[g]);
        meat.noalias() += score * score.transpose();
    }
    const Eigen::MatrixXd bread_inv = bread.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

    RegressionFit fit;
    fit.method = RegressionMethod::gee;
    fit.names = input.names;
    fit.coef = beta;
    fit.coef_cov = bread_inv * meat * bread_inv;
    fit.coef_cov = 0.5 * (fit.coef_cov + fit.coef_cov.transpose()).eval();
    fit.residual_variance = phi;
    fit.working_correlation = alpha;
    fit.objective = resid.squaredNorm();
    fit.iterations = iter;
    fit.converged = true;
    detail::attach_wald(fit);
    return fit;
}

}  // namespace selfreg
