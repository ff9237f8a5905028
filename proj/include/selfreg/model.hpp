#pragma once

#include <span>
#include <vector>

namespace selfreg {

/// Parameters of the forced first-order system
///   dY/dt + gamma (Y - y_eq) = gamma K u(t),  Y(t0) = Y0.
/// The decay rate is stored; the decay time is derived from it.
struct FirstOrderParams {
    double decay_rate = 1.0 / 15.0;
    double gain = 1.0;
    double equilibrium = 0.0;
    double initial_value = 0.0;

    static FirstOrderParams from_decay_time(double tau, double gain, double equilibrium,
                                            double initial_value);

    double decay_time() const { return 1.0 / decay_rate; }

    /// Throws InvalidParameter unless all fields are finite and decay_rate > 0.
    void validate() const;
};

/// How the excitation behaves between its sample stamps.
enum class ExcitationHold {
    /// Constant at the left sample value.
    zero_order,
    /// Linear interpolation between neighbouring samples.
    first_order,
};

/// Known excitation u(t) sampled on strictly increasing stamps. Past the last
/// stamp the last value is held.
struct ExcitationSignal {
    std::vector<double> times;
    std::vector<double> values;
    ExcitationHold hold = ExcitationHold::first_order;

    void validate() const;
    /// u(t); t must not precede the first stamp.
    double at(double t) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
};

/// (Y0 - y_eq) e^{-gamma t} + y_eq.
double solve_homogeneous(const FirstOrderParams& params, double t);

/// Response to a constant excitation switched on at t = 0 from equilibrium:
/// K u (1 - e^{-t/tau}) + y_eq. The initial value in params is ignored.
double solve_step(const FirstOrderParams& params, double u, double t);

/// Exact state after dt under a constant excitation level.
double propagate_hold(double y, double u, double dt, const FirstOrderParams& params);

/// Exact state after dt when the excitation moves linearly from u_start to u_end.
double propagate_ramp(double y, double u_start, double u_end, double dt,
                      const FirstOrderParams& params);

/// Integrates the forced system from times.front() (where Y = Y0) and returns
/// the state at every requested time. The excitation grid must cover
/// [times.front(), times.back()].
Trajectory integrate(const FirstOrderParams& params, const ExcitationSignal& excitation,
                     std::span<const double> times);

}  // namespace selfreg
