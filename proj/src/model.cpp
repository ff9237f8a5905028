#include "selfreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "selfreg/errors.hpp"

namespace selfreg {

FirstOrderParams FirstOrderParams::from_decay_time(double tau, double gain, double equilibrium,
                                                   double initial_value) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidParameter("decay time must be finite and positive, got " + std::to_string(tau));
    FirstOrderParams p{1.0 / tau, gain, equilibrium, initial_value};
    p.validate();
    return p;
}

void FirstOrderParams::validate() const {
    if (!std::isfinite(decay_rate) || !std::isfinite(gain) || !std::isfinite(equilibrium) ||
        !std::isfinite(initial_value))
        throw InvalidParameter("first-order parameters must be finite");
    if (!(decay_rate > 0.0))
        throw InvalidParameter("decay rate must be strictly positive, got " +
                               std::to_string(decay_rate));
}

void ExcitationSignal::validate() const {
    if (times.size() != values.size())
        throw ValidationError("excitation has " + std::to_string(times.size()) + " stamps but " +
                              std::to_string(values.size()) + " values");
    if (times.empty()) throw ValidationError("excitation is empty");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
            throw ValidationError("excitation contains a non-finite entry at index " +
                                  std::to_string(i));
        if (i > 0 && !(times[i] > times[i - 1]))
            throw ValidationError("excitation stamps must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
}

double ExcitationSignal::at(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin())
        throw ValidationError("time " + std::to_string(t) + " precedes the excitation grid");
    const auto k = static_cast<std::size_t>(it - times.begin()) - 1;
    if (hold == ExcitationHold::zero_order || k + 1 == times.size()) return values[k];
    const double w = (t - times[k]) / (times[k + 1] - times[k]);
    return values[k] + w * (values[k + 1] - values[k]);
}

double solve_homogeneous(const FirstOrderParams& params, double t) {
    params.validate();
    if (!(t >= 0.0)) throw InvalidParameter("time must be non-negative");
    return (params.initial_value - params.equilibrium) * std::exp(-params.decay_rate * t) +
           params.equilibrium;
}

double solve_step(const FirstOrderParams& params, double u, double t) {
    params.validate();
    if (!(t >= 0.0)) throw InvalidParameter("time must be non-negative");
    return params.gain * u * -std::expm1(-params.decay_rate * t) + params.equilibrium;
}

double propagate_hold(double y, double u, double dt, const FirstOrderParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("propagation step must be positive");
    const double target = params.equilibrium + params.gain * u;
    return target + (y - target) * std::exp(-params.decay_rate * dt);
}

double propagate_ramp(double y, double u_start, double u_end, double dt,
                      const FirstOrderParams& params) {
    if (!(dt > 0.0)) throw std::invalid_argument("propagation step must be positive");
    // Particular solution for u(s) = u_start + slope s: y_eq + K (u(s) - slope / gamma).
    const double slope = (u_end - u_start) / dt;
    const double lag = slope / params.decay_rate;
    const double start = params.equilibrium + params.gain * (u_start - lag);
    const double end = params.equilibrium + params.gain * (u_end - lag);
    return end + (y - start) * std::exp(-params.decay_rate * dt);
}

Trajectory integrate(const FirstOrderParams& params, const ExcitationSignal& excitation,
                     std::span<const double> times) {
    params.validate();
    excitation.validate();
    Trajectory out;
    if (times.empty()) return out;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw ValidationError("output times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    const auto& stamps = excitation.times;
    if (times.front() < stamps.front() || times.back() > stamps.back())
        throw ValidationError("excitation grid [" + std::to_string(stamps.front()) + ", " +
                              std::to_string(stamps.back()) + "] does not cover output times [" +
                              std::to_string(times.front()) + ", " + std::to_string(times.back()) +
                              "]");

    out.times.assign(times.begin(), times.end());
    out.values.reserve(times.size());

    // k indexes the excitation interval [stamps[k], stamps[k+1]) containing t.
    std::size_t k = static_cast<std::size_t>(
                        std::upper_bound(stamps.begin(), stamps.end(), times.front()) -
                        stamps.begin()) -
                    1;
    double t = times.front();
    double y = params.initial_value;
    out.values.push_back(y);
    auto advance = [&](double to) {
        if (excitation.hold == ExcitationHold::zero_order || k + 1 == stamps.size())
            y = propagate_hold(y, excitation.values[k], to - t, params);
        else
            y = propagate_ramp(y, excitation.at(t), excitation.at(to), to - t, params);
        t = to;
    };
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double target = times[i];
        while (k + 1 < stamps.size() && stamps[k + 1] <= target) {
            if (stamps[k + 1] > t) advance(stamps[k + 1]);
            ++k;
        }
        if (target > t) advance(target);
        out.values.push_back(y);
    }
    return out;
}

}  // namespace selfreg
