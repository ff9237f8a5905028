#include "selfreg/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace selfreg {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = objective(x);
        return std::isfinite(v) ? v : HUGE_VAL;
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = start[i] != 0.0 ? options.initial_step * std::max(1.0, std::abs(start[i]))
                                            : options.initial_step;
        simplex[i + 1][i] += step;
    }
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    auto along = [&](double coef, const std::vector<double>& worst, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
    };

    while (true) {
        std::iota(order.begin(), order.end(), 0);
        // stable sort keeps the first-found point on ties
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        const double spread = values[worst] - values[best];
        if (std::isfinite(spread) &&
            spread <= options.rel_tol * std::max(std::abs(values[best]), 1.0)) {
            result.converged = true;
            break;
        }
        if (result.iterations >= options.max_iterations) break;
        ++result.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        along(-1.0, simplex[worst], trial);
        const double fr = eval(trial);
        if (fr < values[best]) {
            along(-2.0, simplex[worst], trial2);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        // contraction: outside if the reflected point beats the worst, inside otherwise
        const bool outside = fr < values[worst];
        along(outside ? -0.5 : 0.5, simplex[worst], trial2);
        const double fc = eval(trial2);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t k = 0; k < n; ++k)
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            values[i] = eval(simplex[i]);
        }
    }
    const auto best = static_cast<std::size_t>(
        std::min_element(values.begin(), values.end()) - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    return result;
}

}  // namespace selfreg
