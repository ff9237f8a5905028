#include "selfreg/panel.hpp"

#include <cmath>
#include <set>

#include "selfreg/errors.hpp"

namespace selfreg {

std::size_t Panel::n_observations() const {
    std::size_t n = 0;
    for (const auto& ind : individuals) n += ind.size();
    return n;
}

bool Panel::has_truth() const {
    if (individuals.empty()) return false;
    for (const auto& ind : individuals)
        if (!ind.truth || ind.signal_true.size() != ind.size()) return false;
    return true;
}

void Panel::validate() const {
    if (individuals.empty()) throw ValidationError("panel has no individuals");
    std::set<std::string> seen;
    for (const auto& ind : individuals) {
        if (!seen.insert(ind.id).second)
            throw ValidationError("duplicate individual id '" + ind.id + "'");
        if (ind.times.empty()) throw ValidationError("individual '" + ind.id + "' has no observations");
        if (ind.signal.size() != ind.size() || ind.excitation.size() != ind.size())
            throw ValidationError("individual '" + ind.id + "' has mismatched column lengths");
        if (!ind.signal_true.empty() && ind.signal_true.size() != ind.size())
            throw ValidationError("individual '" + ind.id + "' has a truncated noiseless signal");
        for (std::size_t i = 0; i < ind.size(); ++i) {
            if (!std::isfinite(ind.times[i]) || !std::isfinite(ind.signal[i]) ||
                !std::isfinite(ind.excitation[i]))
                throw ValidationError("individual '" + ind.id + "' has a non-finite value at row " +
                                      std::to_string(i));
            if (i > 0 && !(ind.times[i] > ind.times[i - 1]))
                throw ValidationError("times must be strictly increasing within individual '" +
                                      ind.id + "'");
        }
    }
}

}  // namespace selfreg
