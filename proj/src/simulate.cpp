#include "selfreg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selfreg/errors.hpp"

namespace selfreg {

ExcitationShape ExcitationShape::pulse_train(int k) {
    if (k != 3 && k != 5 && k != 10)
        throw ValidationError("pulse trains have 3, 5 or 10 pulses, got " + std::to_string(k));
    return {ShapeKind::pulses, k};
}

ExcitationShape ExcitationShape::parse(const std::string& text) {
    if (text == "two_steps" || text == "2steps") return two_steps();
    if (text == "one_step" || text == "1step") return one_step();
    for (int k : {3, 5, 10}) {
        const auto n = std::to_string(k);
        if (text == "pulses" + n || text == n + "pnt" || text == "pulses(" + n + ")")
            return pulse_train(k);
    }
    throw ValidationError("unknown excitation shape '" + text +
                          "' (expected two_steps, one_step, pulses3, pulses5 or pulses10)");
}

std::string ExcitationShape::name() const {
    switch (kind) {
        case ShapeKind::two_steps: return "two_steps";
        case ShapeKind::one_step: return "one_step";
        case ShapeKind::pulses: return "pulses" + std::to_string(pulses);
    }
    return "?";
}

SimulationCondition SimulationCondition::table(int id) {
    SimulationCondition c;
    c.id = id;
    switch (id) {
        case 1: break;
        case 2: c.decay_rate = 1.0 / 5.0; break;
        case 3: c.decay_rate = 1.0 / 10.0; break;
        case 4: c.decay_rate = 1.0 / 20.0; break;
        case 5: c.shape = ExcitationShape::one_step(); break;
        case 6: c.shape = ExcitationShape::pulse_train(3); break;
        case 7: c.shape = ExcitationShape::pulse_train(5); break;
        case 8: c.shape = ExcitationShape::pulse_train(10); break;
        case 9: c.n_obs = 30; break;
        case 10: c.n_indiv = 20; break;
        case 11: c.n_indiv = 100; break;
        case 12: c.equilibrium = 0.0; break;
        case 13: c.stn = 10.0; break;
        case 14: c.stn = 50.0; break;
        case 15: c.regression = RegressionMethod::ols; break;
        case 16: c.regression = RegressionMethod::gee; break;
        case 17: c.homogeneous = true; break;
        default:
            throw ValidationError("simulation conditions are numbered 1 to 17, got " +
                                  std::to_string(id));
    }
    return c;
}

std::vector<SimulationCondition> SimulationCondition::all_table_conditions() {
    std::vector<SimulationCondition> out;
    for (int id = 1; id <= 17; ++id) out.push_back(table(id));
    return out;
}

FirstOrderParams SimulationCondition::mean_params() const {
    return FirstOrderParams{decay_rate, gain, equilibrium, equilibrium};
}

void SimulationCondition::validate() const {
    mean_params().validate();
    if (n_obs < 2) throw ValidationError("n_obs must be at least 2");
    if (n_indiv < 1) throw ValidationError("n_indiv must be at least 1");
    if (!(stn >= 0.0) || !std::isfinite(stn)) throw ValidationError("stn must be non-negative");
    if (!(inter_indiv_sd_pct >= 0.0) || !std::isfinite(inter_indiv_sd_pct))
        throw ValidationError("inter-individual sd must be non-negative");
    if (shape.kind == ShapeKind::pulses && shape.pulses != 3 && shape.pulses != 5 &&
        shape.pulses != 10)
        throw ValidationError("pulse trains have 3, 5 or 10 pulses");
}

namespace {

int frac_index(double fraction, int n) {
    return static_cast<int>(std::lround(fraction * n));
}

void fill_block(std::vector<double>& u, int begin, int end, const ExcitationShape& shape) {
    if (begin < 0 || end > static_cast<int>(u.size()) || end - begin < 1)
        throw ValidationError("n_obs = " + std::to_string(u.size()) + " is too small for the " +
                              shape.name() + " excitation");
    std::fill(u.begin() + begin, u.begin() + end, 1.0);
}

}  // namespace

std::vector<double> make_excitation(const ExcitationShape& shape, int n_obs,
                                    const ExcitationPlacement& placement) {
    if (n_obs < 20)
        throw ValidationError("n_obs = " + std::to_string(n_obs) + " is too small for the " +
                              shape.name() + " excitation (need at least 20)");
    std::vector<double> u(static_cast<std::size_t>(n_obs), 0.0);
    switch (shape.kind) {
        case ShapeKind::two_steps: {
            const int a = frac_index(placement.first_step_begin, n_obs);
            const int b = frac_index(placement.first_step_end, n_obs);
            const int c = frac_index(placement.second_step_begin, n_obs);
            const int d = frac_index(placement.second_step_end, n_obs);
            if (c <= b) throw ValidationError("two_steps blocks overlap or touch");
            fill_block(u, a, b, shape);
            fill_block(u, c, d, shape);
            break;
        }
        case ShapeKind::one_step:
            fill_block(u, frac_index(placement.single_step_begin, n_obs),
                       frac_index(placement.single_step_end, n_obs), shape);
            break;
        case ShapeKind::pulses: {
            const int k = shape.pulses;
            const int first = frac_index(placement.pulses_begin, n_obs);
            const int last = frac_index(placement.pulses_end, n_obs) - 1;
            int previous = -2;
            for (int i = 0; i < k; ++i) {
                const int pos = first + static_cast<int>(std::lround(
                                            static_cast<double>(i) * (last - first) / (k - 1)));
                if (pos - previous < 2 || pos < 0 || pos >= n_obs)
                    throw ValidationError("n_obs = " + std::to_string(n_obs) +
                                          " is too small for " + std::to_string(k) +
                                          " isolated pulses");
                u[static_cast<std::size_t>(pos)] = 1.0;
                previous = pos;
            }
            break;
        }
    }
    return u;
}

FirstOrderParams draw_individual_params(const FirstOrderParams& mean, double sd_pct, Rng& rng,
                                        double min_decay_time) {
    mean.validate();
    if (!(sd_pct >= 0.0)) throw InvalidParameter("sd_pct must be non-negative");
    if (sd_pct == 0.0) {
        FirstOrderParams p = mean;
        p.initial_value = p.equilibrium;
        return p;
    }
    const double scale = sd_pct / 100.0;
    const double tau_mean = mean.decay_time();
    double tau = 0.0;
    int attempts = 0;
    do {
        if (++attempts > 100)
            throw InvalidParameter("could not draw a decay time above " +
                                   std::to_string(min_decay_time) + " in 100 attempts");
        tau = rng.normal(tau_mean, scale * std::abs(tau_mean));
    } while (tau <= min_decay_time);
    const double gain = rng.normal(mean.gain, scale * std::abs(mean.gain));
    const double equilibrium = rng.normal(mean.equilibrium, scale * std::abs(mean.equilibrium));
    return FirstOrderParams{1.0 / tau, gain, equilibrium, equilibrium};
}

Panel generate_panel(const SimulationCondition& cond, std::uint64_t seed, Execution exec) {
    cond.validate();
    const auto n = static_cast<std::size_t>(cond.n_obs);
    std::vector<double> times(n);
    std::iota(times.begin(), times.end(), 0.0);
    const auto u = make_excitation(cond.shape, cond.n_obs, cond.placement);
    const ExcitationSignal excitation{times, u};
    const auto mean = cond.mean_params();

    Panel panel;
    panel.individuals.resize(static_cast<std::size_t>(cond.n_indiv));
    for_each_index(panel.individuals.size(), exec, [&](std::size_t j) {
        Rng rng(derive_seed({seed, j}));
        const auto params =
            draw_individual_params(mean, cond.inter_indiv_sd_pct, rng, cond.min_decay_time);
        auto clean = integrate(params, excitation, times).values;
        const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
        const double noise_sd = cond.stn / 100.0 * (*hi - *lo);

        Individual ind;
        ind.id = std::to_string(j + 1);
        ind.times = times;
        ind.excitation = u;
        ind.signal.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            ind.signal[i] = noise_sd > 0.0 ? clean[i] + rng.normal(0.0, noise_sd) : clean[i];
        ind.signal_true = std::move(clean);
        ind.truth = params;
        panel.individuals[j] = std::move(ind);
    });
    return panel;
}

}  // namespace selfreg
