#include "bucksim/parity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bucksim {

RootSample root_waveform(double t, bool command, double vsup, double t_slew) {
    RootSample s;
    if (t >= t_slew) {
        s.value = command ? vsup : 0.0;
        return s;
    }
    const double rate = vsup / t_slew;
    const double progress = rate * std::max(t, 0.0);
    if (command) {
        s.value = progress;
        s.slope = rate;
    } else {
        s.value = vsup - progress;
        s.slope = -rate;
    }
    return s;
}

GateNodeCoeffs make_gate_node_coeffs(const MitigationConfig& m, double dt) {
    GateNodeCoeffs c;
    const double c_total = m.c_par + m.c_gate;
    c.q = dt / (2.0 * m.r_drv * c_total);
    c.dvc = m.c_par / c_total;
    return c;
}

bool comparator_update(bool prev, double v, double threshold, double hysteresis) {
    const double half = 0.5 * hysteresis;
    if (!prev && v > threshold + half) return true;
    if (prev && v < threshold - half) return false;
    return prev;
}

double min_parity_cap(const MitigationConfig& m, double vsup, double freq,
                      double duty) {
    const double need = 0.5 * vsup + 0.1 * vsup;
    const double t_phase = std::max(duty, 1.0 - duty) / freq;
    const auto plateau = [&](double c) {
        const double divider = c / (c + m.c_gate);
        return vsup * divider * std::exp(-t_phase / (m.r_drv * (c + m.c_gate)));
    };

    double lo = m.c_gate;
    double hi = 1e-6;
    if (plateau(hi) < need) return std::numeric_limits<double>::infinity();
    if (plateau(lo) >= need) return lo;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (plateau(mid) >= need) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double phase_shift_estimate(const MitigationConfig& m) {
    if (m.c_par <= 0.0) return std::numeric_limits<double>::infinity();
    // The node ramps at (c_par / (c_par + c_gate)) * vsup / t_slew and must
    // cover vsup / 2 to reach the comparator threshold.
    return m.t_slew * (m.c_par + m.c_gate) / (2.0 * m.c_par);
}

}  // namespace bucksim
