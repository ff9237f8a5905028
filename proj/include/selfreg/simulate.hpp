#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfreg/methods.hpp"
#include "selfreg/model.hpp"
#include "selfreg/panel.hpp"
#include "selfreg/parallel.hpp"
#include "selfreg/rng.hpp"

namespace selfreg {

enum class ShapeKind { two_steps, one_step, pulses };

struct ExcitationShape {
    ShapeKind kind = ShapeKind::two_steps;
    int pulses = 0;  // 3, 5 or 10 when kind == pulses

    static ExcitationShape two_steps() { return {ShapeKind::two_steps, 0}; }
    static ExcitationShape one_step() { return {ShapeKind::one_step, 0}; }
    static ExcitationShape pulse_train(int k);

    /// "two_steps", "one_step", "pulses3", ... (also accepts "2steps", "1step", "3pnt").
    static ExcitationShape parse(const std::string& text);
    std::string name() const;
};

/// Onsets and offsets of the excitation shapes as fractions of n_obs.
/// Blocks are half-open: [round(a n), round(b n)).
struct ExcitationPlacement {
    double first_step_begin = 0.2;
    double first_step_end = 0.4;
    double second_step_begin = 0.6;
    double second_step_end = 0.8;
    double single_step_begin = 0.2;
    double single_step_end = 0.5;
    double pulses_begin = 0.2;
    double pulses_end = 0.7;
};

struct SimulationCondition {
    int id = 1;
    double decay_rate = 1.0 / 15.0;
    ExcitationShape shape = ExcitationShape::two_steps();
    int n_obs = 50;
    int n_indiv = 50;
    double equilibrium = 0.5;
    double stn = 30.0;  // noise sd, % of each individual's noiseless range
    RegressionMethod regression = RegressionMethod::lmm;
    bool homogeneous = false;
    double gain = 1.0;
    double inter_indiv_sd_pct = 20.0;
    double min_decay_time = 1.0;  // draws at or below are rejected
    ExcitationPlacement placement{};

    /// Condition `id` (1..17) of the reference simulation design.
    static SimulationCondition table(int id);
    static std::vector<SimulationCondition> all_table_conditions();

    FirstOrderParams mean_params() const;
    void validate() const;
};

/// Unit-amplitude excitation for n_obs unit-spaced observations.
std::vector<double> make_excitation(const ExcitationShape& shape, int n_obs,
                                    const ExcitationPlacement& placement = {});

/// Draws decay time, gain and equilibrium independently from
/// Normal(mean, sd_pct/100 |mean|); the initial value is set to the drawn
/// equilibrium. Decay times <= min_decay_time are redrawn.
FirstOrderParams draw_individual_params(const FirstOrderParams& mean, double sd_pct, Rng& rng,
                                        double min_decay_time = 1.0);

/// Simulated panel. Each individual uses its own substream derived from
/// (seed, individual index), so the result does not depend on `exec`.
Panel generate_panel(const SimulationCondition& cond, std::uint64_t seed,
                     Execution exec = Execution::parallel);

}  // namespace selfreg
