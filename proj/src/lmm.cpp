#include <cmath>
#include <numbers>
#include <sstream>

#include "regress_internal.hpp"
#include "selfreg/errors.hpp"
#include "selfreg/nelder_mead.hpp"

namespace selfreg {

struct LmmProblem::Solution {
    Eigen::MatrixXd lambda;
    Eigen::VectorXd beta;
    Eigen::MatrixXd schur;
    std::vector<Eigen::VectorXd> modes;  // spherical u_j
    double pwrss = 0.0;
    double logdet_m = 0.0;
    double logdet_schur = 0.0;
    bool ok = false;
};

LmmProblem::LmmProblem(const RegressionInput& input) : names_(input.names) {
    input.validate();
    q_ = static_cast<std::size_t>(input.design.cols());
    n_ = static_cast<std::size_t>(input.design.rows());
    n_groups_ = input.n_groups;
    const auto q = input.design.cols();

    // Centre (when column 0 is an intercept) and scale the other columns.
    const bool intercept = (input.design.col(0).array() == 1.0).all();
    Eigen::MatrixXd S = Eigen::MatrixXd::Identity(q, q);
    for (Eigen::Index k = intercept ? 1 : 0; k < q; ++k) {
        const double mean = intercept ? input.design.col(k).mean() : 0.0;
        const double scale =
            std::sqrt((input.design.col(k).array() - mean).square().mean());
        const double s = scale > 0.0 ? scale : 1.0;
        S(k, k) = 1.0 / s;
        if (intercept) S(0, k) = -mean / s;
    }
    to_original_ = S;
    const Eigen::MatrixXd X = input.design * S;

    gram_.assign(n_groups_, Eigen::MatrixXd::Zero(q, q));
    cross_.assign(n_groups_, Eigen::VectorXd::Zero(q));
    yy_.assign(n_groups_, 0.0);
    counts_.assign(n_groups_, 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const auto g = input.group[static_cast<std::size_t>(i)];
        const Eigen::VectorXd x = X.row(i).transpose();
        const double y = input.response(i);
        gram_[g].noalias() += x * x.transpose();
        cross_[g] += x * y;
        yy_[g] += y * y;
        ++counts_[g];
    }
}

std::vector<double> LmmProblem::initial_theta() const {
    const auto q = static_cast<Eigen::Index>(q_);
    std::vector<double> theta(n_theta(), 0.0);
    std::vector<Eigen::VectorXd> coefs;
    double rss = 0.0, dof = 0.0;
    for (std::size_t g = 0; g < n_groups_; ++g) {
        if (counts_[g] <= q_) continue;
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram_[g]);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-10 * gram_[g].trace())
            continue;
        Eigen::VectorXd b = ldlt.solve(cross_[g]);
        rss += std::max(yy_[g] - b.dot(cross_[g]), 0.0);
        dof += static_cast<double>(counts_[g] - q_);
        coefs.push_back(std::move(b));
    }
    Eigen::MatrixXd rel = Eigen::MatrixXd::Identity(q, q) * 0.1;
    if (coefs.size() >= 2 && dof > 0.0 && rss > 0.0) {
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
        for (const auto& b : coefs) mean += b;
        mean /= static_cast<double>(coefs.size());
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(q, q);
        for (const auto& b : coefs) cov += (b - mean) * (b - mean).transpose();
        cov /= static_cast<double>(coefs.size() - 1);
        const double sigma2 = rss / dof;
        Eigen::MatrixXd candidate = cov / sigma2;
        candidate.diagonal().array() += 1e-6 * std::max(candidate.diagonal().maxCoeff(), 1.0);
        if (candidate.allFinite()) rel = candidate;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(rel);
    const Eigen::MatrixXd L = llt.info() == Eigen::Success
                                  ? Eigen::MatrixXd(llt.matrixL())
                                  : Eigen::MatrixXd(Eigen::MatrixXd::Identity(q, q) * std::sqrt(0.1));
    std::size_t pos = 0;
    for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index r = c; r < q; ++r) theta[pos++] = L(r, c);
    return theta;
}

LmmProblem::Solution LmmProblem::solve(const std::vector<double>& theta) const {
    const auto q = static_cast<Eigen::Index>(q_);
    Solution sol;
    sol.lambda = Eigen::MatrixXd::Zero(q, q);
    std::size_t pos = 0;
    for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index r = c; r < q; ++r) sol.lambda(r, c) = theta[pos++];
    const auto& L = sol.lambda;

    sol.schur = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(q);
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
    std::vector<Eigen::MatrixXd> cross_terms;  // Lambda' Z_j'X_j
    std::vector<Eigen::VectorXd> lam_cross;    // Lambda' Z_j'y_j
    factors.reserve(n_groups_);
    cross_terms.reserve(n_groups_);
    lam_cross.reserve(n_groups_);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(q, q);
    for (std::size_t g = 0; g < n_groups_; ++g) {
        const auto& A = gram_[g];
        sol.schur += A;
        rhs += cross_[g];
        Eigen::MatrixXd P = L.transpose() * A;
        Eigen::MatrixXd M = P * L + I;
        factors.emplace_back(M);
        const auto& llt = factors.back();
        if (llt.info() != Eigen::Success) return sol;
        sol.logdet_m += 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        Eigen::VectorXd lc = L.transpose() * cross_[g];
        sol.schur -= P.transpose() * llt.solve(P);
        rhs -= P.transpose() * llt.solve(lc);
        cross_terms.push_back(std::move(P));
        lam_cross.push_back(std::move(lc));
    }
    const Eigen::LLT<Eigen::MatrixXd> schur_llt(sol.schur);
    if (schur_llt.info() != Eigen::Success) return sol;
    sol.logdet_schur = 2.0 * schur_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    sol.beta = schur_llt.solve(rhs);

    sol.modes.resize(n_groups_);
    double pwrss = 0.0;
    for (std::size_t g = 0; g < n_groups_; ++g) {
        sol.modes[g] = factors[g].solve(lam_cross[g] - cross_terms[g] * sol.beta);
        const Eigen::VectorXd w = sol.beta + L * sol.modes[g];
        pwrss += yy_[g] - 2.0 * cross_[g].dot(w) + w.dot(gram_[g] * w) + sol.modes[g].squaredNorm();
    }
    sol.pwrss = std::max(pwrss, std::numeric_limits<double>::min());
    sol.ok = std::isfinite(sol.logdet_m) && std::isfinite(sol.logdet_schur);
    return sol;
}

double LmmProblem::deviance(const std::vector<double>& theta) const {
    if (theta.size() != n_theta()) throw ValidationError("theta has the wrong length");
    const auto sol = solve(theta);
    if (!sol.ok) return HUGE_VAL;
    const double dof = static_cast<double>(n_ - q_);
    return sol.logdet_m + sol.logdet_schur +
           dof * (1.0 + std::log(2.0 * std::numbers::pi * sol.pwrss / dof));
}

RegressionFit LmmProblem::evaluate(const std::vector<double>& theta) const {
    const auto sol = solve(theta);
    if (!sol.ok) throw EstimationError("mixed-model system is singular at the optimum");
    const auto& S = to_original_;
    const double dof = static_cast<double>(n_ - q_);
    const auto q = static_cast<Eigen::Index>(q_);

    RegressionFit fit;
    fit.method = RegressionMethod::lmm;
    fit.names = names_;
    fit.theta = theta;
    fit.residual_variance = sol.pwrss / dof;
    fit.coef = S * sol.beta;
    fit.coef_cov = fit.residual_variance * S *
                   sol.schur.llt().solve(Eigen::MatrixXd::Identity(q, q)) * S.transpose();
    fit.random_cov = fit.residual_variance * S * sol.lambda * sol.lambda.transpose() * S.transpose();
    fit.random_effects.resize(static_cast<Eigen::Index>(n_groups_), q);
    for (std::size_t g = 0; g < n_groups_; ++g)
        fit.random_effects.row(static_cast<Eigen::Index>(g)) =
            (S * sol.lambda * sol.modes[g]).transpose();
    fit.objective = deviance(theta);
    detail::attach_wald(fit);
    return fit;
}

RegressionFit fit_lmm(const RegressionInput& input, const LmmOptions& options) {
    input.validate();
    if (input.n_groups < 2)
        throw ValidationError("the mixed-effects regression needs at least 2 individuals, got " +
                              std::to_string(input.n_groups) + "; use the ols regression instead");
    detail::check_full_rank(input);
    const LmmProblem problem(input);

    auto objective = [&](const std::vector<double>& th) { return problem.deviance(th); };
    NelderMeadOptions nm;
    nm.max_iterations = options.max_iterations;
    nm.rel_tol = options.rel_tol;
    auto best = nelder_mead(objective, problem.initial_theta(), nm);
    int iterations = best.iterations;
    bool converged = best.converged;
    for (int r = 0; r < options.restarts && converged; ++r) {
        nm.initial_step = 0.05;
        auto again = nelder_mead(objective, best.x, nm);
        iterations += again.iterations;
        converged = again.converged;
        const bool improved =
            again.value < best.value - options.rel_tol * std::max(std::abs(best.value), 1.0);
        if (again.value < best.value) best = again;
        if (!improved) break;
    }
    if (!converged || !std::isfinite(best.value)) {
        std::ostringstream msg;
        msg << "REML optimisation did not converge within " << options.max_iterations
            << " simplex iterations (best deviance " << best.value << ")";
        throw ConvergenceError(msg.str(), best.value);
    }

    RegressionFit fit = problem.evaluate(best.x);
    fit.iterations = iterations;
    fit.converged = true;

    // Boundary: a random effect whose relative variance collapsed to ~0.
    const auto q = input.names.size();
    std::vector<double> rel_var(q, 0.0);
    std::size_t pos = 0;
    for (std::size_t c = 0; c < q; ++c)
        for (std::size_t r = c; r < q; ++r, ++pos) rel_var[r] += best.x[pos] * best.x[pos];
    for (std::size_t k = 0; k < q; ++k) {
        if (rel_var[k] < 1e-8) {
            fit.boundary = true;
            fit.warnings.push_back("random effect on '" + input.names[k] +
                                   "' has (near) zero variance; boundary fit");
        }
    }
    const auto groups = detail::rows_by_group(input);
    std::size_t small = 0;
    for (const auto& g : groups) small += g.size() < 4;
    if (small > 0)
        fit.warnings.push_back(std::to_string(small) +
                               " individual(s) contribute fewer than 4 rows to the mixed model");
    return fit;
}

}  // namespace selfreg
