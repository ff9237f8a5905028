#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "selfreg/deriv.hpp"
#include "selfreg/errors.hpp"

namespace selfreg {

namespace {

constexpr int kBand = 2;

/// In-place Cholesky of a symmetric positive-definite pentadiagonal matrix
/// stored by diagonals: band[k][i] = A(i, i + k), k = 0..2.
/// Solves A x = b, overwriting b.
void banded_cholesky_solve(std::array<std::vector<double>, kBand + 1> band, std::vector<double>& b) {
    const auto n = b.size();
    // L(i, i - k) stored in low[k][i].
    std::array<std::vector<double>, kBand + 1> low;
    for (auto& v : low) v.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = band[0][j];
        for (int k = 1; k <= kBand && static_cast<std::size_t>(k) <= j; ++k)
            diag -= low[k][j] * low[k][j];
        if (!(diag > 0.0)) throw EstimationError("smoothing spline system is not positive definite");
        low[0][j] = std::sqrt(diag);
        for (int off = 1; off <= kBand && j + off < n; ++off) {
            const auto i = j + static_cast<std::size_t>(off);
            double v = band[off][j];
            // columns c = i - k < j shared by rows i and j inside the band
            for (int k = off + 1; k <= kBand && static_cast<std::size_t>(k) <= i; ++k)
                v -= low[k][i] * low[static_cast<std::size_t>(k - off)][j];
            low[off][i] = v / low[0][j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (int k = 1; k <= kBand && static_cast<std::size_t>(k) <= i; ++k)
            v -= low[k][i] * b[i - static_cast<std::size_t>(k)];
        b[i] = v / low[0][i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (int k = 1; k <= kBand && ii + static_cast<std::size_t>(k) < n; ++k)
            v -= low[k][ii + static_cast<std::size_t>(k)] * b[ii + static_cast<std::size_t>(k)];
        b[ii] = v / low[0][ii];
    }
}

void check_abscissa(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size())
        throw ValidationError("smoothing spline needs as many values as times");
    if (times.size() < 4) throw ValidationError("smoothing spline needs at least 4 distinct time points");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
            throw ValidationError("smoothing spline input contains a non-finite value");
        if (i > 0 && !(times[i] > times[i - 1])) {
            std::ostringstream msg;
            msg << "smoothing spline times must be strictly increasing without duplicates (index "
                << i << ", t = " << times[i] << ")";
            throw ValidationError(msg.str());
        }
    }
}

// Cubic B-spline basis values and derivatives up to order 2 on knot span
// `span` (de Boor / Piegl-Tiller recurrence). ders[k][j] is the k-th
// derivative of basis function span - 3 + j.
using BasisDerivs = std::array<std::array<double, 4>, 3>;

BasisDerivs cubic_basis_derivs(const std::vector<double>& U, std::size_t span, double x) {
    constexpr int p = 3;
    constexpr int nd = 2;
    double ndu[p + 1][p + 1];
    double left[p + 1], right[p + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - U[span + 1 - static_cast<std::size_t>(j)];
        right[j] = U[span + static_cast<std::size_t>(j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    BasisDerivs ders{};
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];
    double a[2][p + 1];
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            const int rk = r - k, pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
        factor *= (p - k);
    }
    return ders;
}

}  // namespace

double spar_to_lambda(std::span<const double> times, double spar) {
    if (!(spar >= 0.0 && spar <= 1.0))
        throw ValidationError("spar must lie in [0, 1], got " + std::to_string(spar));
    std::vector<double> dummy(times.size(), 0.0);
    check_abscissa(times, dummy);

    const double t0 = times.front();
    const double range = times.back() - t0;
    std::vector<double> s(times.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (times[i] - t0) / range;
    s.back() = 1.0;

    // Knot vector with quadruple end knots and every interior abscissa.
    std::vector<double> U;
    U.reserve(s.size() + 6);
    U.insert(U.end(), 3, 0.0);
    U.insert(U.end(), s.begin(), s.end());
    U.insert(U.end(), 3, 1.0);
    const std::size_t nb = U.size() - 4;

    std::vector<double> xtx(nb, 0.0), omega(nb, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        // span: U[span] <= s < U[span + 1], last point on the last span.
        const std::size_t span = std::min<std::size_t>(i + 3, nb - 1);
        const auto d = cubic_basis_derivs(U, span, s[i]);
        for (std::size_t j = 0; j < 4; ++j) xtx[span - 3 + j] += d[0][j] * d[0][j];
    }
    for (std::size_t span = 3; span < nb; ++span) {
        const double a = U[span], b = U[span + 1];
        const double h = b - a;
        if (!(h > 0.0)) continue;
        // B'' is linear on the span, so Simpson's rule integrates its square exactly.
        const auto da = cubic_basis_derivs(U, span, a);
        const auto dm = cubic_basis_derivs(U, span, 0.5 * (a + b));
        const auto db = cubic_basis_derivs(U, span, b);
        for (std::size_t j = 0; j < 4; ++j)
            omega[span - 3 + j] +=
                h / 6.0 * (da[2][j] * da[2][j] + 4.0 * dm[2][j] * dm[2][j] + db[2][j] * db[2][j]);
    }
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t k = 2; k + 3 < nb; ++k) {
        t1 += xtx[k];
        t2 += omega[k];
    }
    const double ratio = t1 / t2;
    return ratio * std::pow(256.0, 3.0 * spar - 1.0) * range * range * range;
}

SmoothingSpline::SmoothingSpline(std::span<const double> times, std::span<const double> values,
                                 double lambda)
    : knots_(times.begin(), times.end()), lambda_(lambda) {
    check_abscissa(times, values);
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ValidationError("roughness penalty must be finite and non-negative");
    const std::size_t n = knots_.size();
    const std::size_t m = n - 2;
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = knots_[i + 1] - knots_[i];

    // Q (n x m) has column j with entries at rows j, j+1, j+2.
    auto q0 = [&](std::size_t j) { return 1.0 / h[j]; };
    auto q1 = [&](std::size_t j) { return -1.0 / h[j] - 1.0 / h[j + 1]; };
    auto q2 = [&](std::size_t j) { return 1.0 / h[j + 1]; };

    std::array<std::vector<double>, kBand + 1> band;
    for (auto& v : band) v.assign(m, 0.0);
    std::vector<double> rhs(m);
    for (std::size_t j = 0; j < m; ++j) {
        band[0][j] = (h[j] + h[j + 1]) / 3.0 +
                     lambda * (q0(j) * q0(j) + q1(j) * q1(j) + q2(j) * q2(j));
        if (j + 1 < m) band[1][j] = h[j + 1] / 6.0 + lambda * (q1(j) * q0(j + 1) + q2(j) * q1(j + 1));
        if (j + 2 < m) band[2][j] = lambda * q2(j) * q0(j + 2);
        rhs[j] = q0(j) * values[j] + q1(j) * values[j + 1] + q2(j) * values[j + 2];
    }
    banded_cholesky_solve(band, rhs);

    second_.assign(n, 0.0);
    for (std::size_t j = 0; j < m; ++j) second_[j + 1] = rhs[j];
    fitted_.assign(values.begin(), values.end());
    if (lambda > 0.0) {
        for (std::size_t j = 0; j < m; ++j) {
            fitted_[j] -= lambda * q0(j) * rhs[j];
            fitted_[j + 1] -= lambda * q1(j) * rhs[j];
            fitted_[j + 2] -= lambda * q2(j) * rhs[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) rss_ += (values[i] - fitted_[i]) * (values[i] - fitted_[i]);
}

std::size_t SmoothingSpline::interval(double t) const {
    if (t < knots_.front() || t > knots_.back()) {
        std::ostringstream msg;
        msg << "spline evaluated at t = " << t << " outside [" << knots_.front() << ", "
            << knots_.back() << "]";
        throw ValidationError(msg.str());
    }
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    auto i = static_cast<std::size_t>(it - knots_.begin());
    return std::min(i == 0 ? 0 : i - 1, knots_.size() - 2);
}

double SmoothingSpline::value(double t) const {
    const auto i = interval(t);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - t) / h;
    const double b = (t - knots_[i]) / h;
    return a * fitted_[i] + b * fitted_[i + 1] +
           ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * h * h / 6.0;
}

double SmoothingSpline::derivative(double t) const {
    const auto i = interval(t);
    const double h = knots_[i + 1] - knots_[i];
    const double a = (knots_[i + 1] - t) / h;
    const double b = (t - knots_[i]) / h;
    return (fitted_[i + 1] - fitted_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * second_[i] +
           (3.0 * b * b - 1.0) / 6.0 * h * second_[i + 1];
}

SmoothingSpline fit_smoothing_spline(std::span<const double> times, std::span<const double> values,
                                     const SplineConfig& cfg) {
    const double lambda = cfg.lambda >= 0.0 ? cfg.lambda : spar_to_lambda(times, cfg.spar);
    return SmoothingSpline(times, values, lambda);
}

DerivativeRows spline_derivatives(std::span<const double> signal,
                                  std::span<const double> excitation,
                                  std::span<const double> times, const SplineConfig& cfg,
                                  std::size_t group) {
    if (excitation.size() != signal.size() || times.size() != signal.size())
        throw ValidationError("signal, excitation and times must have the same length");
    const double lambda = cfg.lambda >= 0.0 ? cfg.lambda : spar_to_lambda(times, cfg.spar);
    const SmoothingSpline spline(times, signal, lambda);
    // The excitation goes through the same smoother so that the regression
    // sees y, y' and u filtered alike.
    const SmoothingSpline u_spline(times, excitation, lambda);
    DerivativeRows out;
    out.rows.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        DerivativeRow row;
        row.group = group;
        row.t_center = times[i];
        row.y_smooth = spline.fitted()[i];
        row.y_dot = spline.derivative(times[i]);
        row.u_avg = u_spline.fitted()[i];
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace selfreg
