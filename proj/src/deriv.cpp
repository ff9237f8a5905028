#include <cstdio>

#include "selfreg/deriv.hpp"
#include "selfreg/errors.hpp"

namespace selfreg {

double DerivativeSpec::hyperparameter() const {
    return kind == DerivativeKind::glla ? static_cast<double>(embedding) : spar;
}

std::string DerivativeSpec::describe() const {
    if (kind == DerivativeKind::glla) return "glla(d=" + std::to_string(embedding) + ")";
    char buf[48];
    std::snprintf(buf, sizeof buf, "fda(spar=%.4g)", spar);
    return buf;
}

DerivativeRows derive_panel(const Panel& panel, const DerivativeSpec& spec, Execution exec) {
    const auto n = panel.individuals.size();
    std::vector<DerivativeRows> parts(n);
    for_each_index(n, exec, [&](std::size_t j) {
        const auto& ind = panel.individuals[j];
        if (spec.kind == DerivativeKind::glla)
            parts[j] = glla_derivatives(ind.signal, ind.excitation, ind.times,
                                        GllaConfig{spec.embedding, 0.0}, j);
        else
            parts[j] = spline_derivatives(ind.signal, ind.excitation, ind.times,
                                          SplineConfig{spec.spar, -1.0}, j);
    });
    DerivativeRows out;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.rows.size();
    out.rows.reserve(total);
    for (auto& p : parts) {
        out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
        for (auto& w : p.warnings) out.warnings.push_back(std::move(w));
    }
    return out;
}

}  // namespace selfreg
