#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selfreg/model.hpp"

namespace selfreg {

/// One individual's longitudinal series.
struct Individual {
    std::string id;
    std::vector<double> times;
    std::vector<double> signal;
    std::vector<double> excitation;
    // Simulation only.
    std::vector<double> signal_true;
    std::optional<FirstOrderParams> truth;

    std::size_t size() const { return times.size(); }
    ExcitationSignal excitation_signal() const { return {times, excitation}; }
};

struct Panel {
    std::vector<Individual> individuals;

    std::size_t n_observations() const;
    bool has_truth() const;
    /// Equal lengths, strictly increasing times, finite values, unique ids.
    void validate() const;
};

}  // namespace selfreg
