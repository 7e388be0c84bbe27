#pragma once

#include "bucksim/scenario.hpp"

namespace bucksim {

/// Total hysteresis band of the gate comparators [V].
inline constexpr double kComparatorHysteresis = 0.010;

/// One sample of the PWM root waveform: instantaneous voltage and slope.
struct RootSample {
    double value = 0.0;
    double slope = 0.0;
};

/// Trapezoidal root-of-PWM waveform, rail to rail with linear edges of
/// duration t_slew.  `t` counts from the most recent command change; a high
/// command ramps from 0 toward vsup, a low command from vsup toward 0.
RootSample root_waveform(double t, bool command, double vsup, double t_slew);

/// Slew-limited tracker for the clean copy of a PWM edge feeding the parity
/// capacitor.
struct SlewTracker {
    double value = 0.0;

    /// Move toward `target` at most `rate` volts per second over `dt`;
    /// returns the realised change.
    double advance(double target, double rate, double dt) {
        double dv = target - value;
        const double cap = rate * dt;
        if (dv > cap) {
            dv = cap;
        } else if (dv < -cap) {
            dv = -cap;
        }
        value += dv;
        return dv;
    }
};

/// Trapezoidal update for one gate node obeying
///   (c_par + c_gate) dv/dt = c_par dv_root/dt + (v_logic - v) / r_drv
/// with the root edge supplied as a per-step increment.
struct GateNodeCoeffs {
    double q = 0.0;    // dt / (2 r_drv (c_par + c_gate))
    double dvc = 0.0;  // c_par / (c_par + c_gate)

    double step(double v, double v_logic, double droot) const {
        return (v * (1.0 - q) + dvc * droot + 2.0 * q * v_logic) / (1.0 + q);
    }
};

GateNodeCoeffs make_gate_node_coeffs(const MitigationConfig& m, double dt);

/// Comparator with a symmetric hysteresis band around `threshold`.
bool comparator_update(bool prev, double v, double threshold, double hysteresis);

/// Smallest parity capacitor that keeps a coupled edge beyond the switching
/// threshold, with a 10% supply margin, for the longest PWM phase while a
/// stuck driver pulls the node the other way.  Bisected to 1 pF; +inf when
/// no capacitor up to 1 uF suffices.
double min_parity_cap(const MitigationConfig& m, double vsup, double freq,
                      double duty);

/// Comparator delay added by the capacitive divider on a slewed edge.  The
/// supply voltage cancels because the threshold sits at half the supply.
/// Returns +inf when c_par is zero (the divider never reaches threshold).
double phase_shift_estimate(const MitigationConfig& m);

}  // namespace bucksim
