#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "selfreg/deriv.hpp"
#include "selfreg/errors.hpp"

namespace selfreg {

Eigen::MatrixX2d glla_weights(int embedding, double dt) {
    if (embedding < 2) throw ValidationError("GLLA embedding dimension must be at least 2");
    if (!(dt > 0.0)) throw ValidationError("GLLA time step must be positive");
    const double center = (embedding + 1) / 2.0;
    Eigen::MatrixX2d L(embedding, 2);
    for (int v = 1; v <= embedding; ++v) {
        L(v - 1, 0) = 1.0;
        L(v - 1, 1) = dt * (v - center);
    }
    const Eigen::Matrix2d gram = L.transpose() * L;
    Eigen::LDLT<Eigen::Matrix2d> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw EstimationError("singular GLLA moment matrix");
    return L * ldlt.solve(Eigen::Matrix2d::Identity());
}

DerivativeRows glla_derivatives(std::span<const double> signal, std::span<const double> excitation,
                                std::span<const double> times, const GllaConfig& cfg,
                                std::size_t group) {
    const auto n = signal.size();
    const auto d = static_cast<std::size_t>(std::max(cfg.embedding, 0));
    if (excitation.size() != n || times.size() != n)
        throw ValidationError("signal, excitation and times must have the same length");
    if (cfg.embedding < 2) throw ValidationError("GLLA embedding dimension must be at least 2");
    if (d > n) {
        std::ostringstream msg;
        msg << "GLLA embedding dimension " << d << " exceeds the " << n << " observations of individual "
            << group;
        throw ValidationError(msg.str());
    }

    DerivativeRows out;
    double dt = cfg.dt;
    if (!(dt > 0.0)) {
        if (n < 2) throw ValidationError("need two observations to infer the GLLA time step");
        std::vector<double> gaps(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) gaps[i] = times[i + 1] - times[i];
        dt = (times[n - 1] - times[0]) / static_cast<double>(n - 1);
        const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
        if ((*hi - *lo) > 0.1 * dt) {
            std::ostringstream msg;
            msg << "individual " << group << ": sampling is not uniform (gaps " << *lo << " to "
                << *hi << "); GLLA uses the mean step " << dt;
            out.warnings.push_back(msg.str());
        }
    }

    const Eigen::MatrixX2d W = glla_weights(cfg.embedding, dt);
    out.rows.reserve(n - d + 1);
    for (std::size_t i = 0; i + d <= n; ++i) {
        DerivativeRow row;
        row.group = group;
        double t_sum = 0.0, u_sum = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            row.y_smooth += W(kk, 0) * signal[i + k];
            row.y_dot += W(kk, 1) * signal[i + k];
            t_sum += times[i + k];
            u_sum += excitation[i + k];
        }
        row.t_center = t_sum / static_cast<double>(d);
        row.u_avg = u_sum / static_cast<double>(d);
        out.rows.push_back(row);
    }
    return out;
}

}  // namespace selfreg
