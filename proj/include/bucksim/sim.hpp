#pragma once

#include <stdexcept>
#include <vector>

#include "bucksim/scenario.hpp"
#include "bucksim/state.hpp"

namespace bucksim {

/// Thrown when the integrator produces a non-finite state.
class SimDivergence : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Commanded half-bridge drive at absolute time t with continuous-time
/// semantics; current_duty allows a per-cycle controller to override the
/// configured duty.  The simulator snaps edges to the step grid; this is
/// the reference that stream converges to as dt shrinks.
GateLevels pwm_levels(double t, const PwmParams& p, double current_duty);

double switch_node_voltage(const ConverterParams& c, GateLevels g, double i_l);
double output_voltage(const ConverterParams& c, double v_c, double i_l);
double supply_current(const ConverterParams& c, GateLevels g, double i_l);

struct StateDeriv {
    double di_l = 0.0;
    double dv_c = 0.0;
};

StateDeriv derivatives(const ConverterParams& c, GateLevels g, double i_l,
                       double v_c);

/// One implicit trapezoidal step of the power stage, reduced to an affine
/// map on [i_l, v_c].  simulate() caches one of these per drive combination
/// and applies them verbatim, so results here match the full run bit for bit.
struct StepCoeffs {
    double m00 = 1.0, m01 = 0.0;
    double m10 = 0.0, m11 = 1.0;
    double k0 = 0.0, k1 = 0.0;

    void apply(double& i_l, double& v_c) const {
        const double i = m00 * i_l + m01 * v_c + k0;
        const double v = m10 * i_l + m11 * v_c + k1;
        i_l = i;
        v_c = v;
    }
};

StepCoeffs make_step_coeffs(const ConverterParams& c, GateLevels g, double dt);

struct SimResult {
    TraceSet traces;
    EnergyAccount energy;
    std::vector<double> duty_per_cycle;
};

/// Run the scenario from zero state to t_end, recording from record_start
/// onward.  Throws SimDivergence on numeric blow-up.
SimResult simulate(const Scenario& s);

}  // namespace bucksim
