#pragma once

#include <string>
#include <string_view>

#include "bucksim/scenario.hpp"
#include "bucksim/state.hpp"

namespace bucksim {

enum class OutcomeClass { Nominal, Degraded, Overvolt, SevereOvervolt, Disabled };

std::string_view outcome_name(OutcomeClass o);

struct SteadyStateMetrics {
    double v_avg = 0.0;        // mean output voltage [V]
    double ripple_pp = 0.0;    // peak-to-peak output ripple [V]
    double efficiency = 0.0;   // p_out / p_in
    double i_l_avg = 0.0;      // mean inductor current [A]
    double v_out_min = 0.0;
    double v_out_max = 0.0;
    double v_sw_min = 0.0;
    double v_sw_max = 0.0;
    double duty_effective = 0.0;  // fraction of the window with the PMOS gate low
    double shoot_through_energy = 0.0;  // [J] while both switches conduct
    double p_in = 0.0;                  // includes the lumped gate-charge term
    double p_out = 0.0;
    OutcomeClass outcome = OutcomeClass::Degraded;
    std::string explanation;
};

/// Evaluate the recorded window.  Means use the samples up to but not
/// including the final one, so a periodic wave over a whole number of
/// periods averages exactly; extrema use every sample.  Throws
/// std::invalid_argument when the window spans fewer than 20 periods.
SteadyStateMetrics measure(const TraceSet& tr, const Scenario& s);

struct RippleEstimate {
    double delta_i = 0.0;    // inductor current swing [A]
    double cap_term = 0.0;   // ripple from charging the capacitor [V]
    double esr_term = 0.0;   // ripple across the capacitor ESR [V]
    double total = 0.0;      // [V]
};

/// Small-ripple analytic estimate for continuous conduction.
RippleEstimate ripple_analytic(const ConverterParams& c, double freq,
                               double duty, double v_target);

/// Scenario-level convenience: duty from the PWM block, target from vref.
/// Meaningful for open-loop, trojan-free runs.
RippleEstimate ripple_analytic(const Scenario& s);

/// Duty that centres the output on v_target, accounting for conduction drops
/// through a few fixed-point refinements of the duty-weighted on resistance.
/// Throws std::domain_error when the target needs a duty above 1.
double duty_for_target(const ConverterParams& c, double v_target);

/// First matching rule wins; the order encodes severity.
OutcomeClass classify(double v_avg, double ripple_pp, double v_sw_min,
                      double v_sw_max, double v_out_max, double v_target,
                      double vsup);

std::string outcome_explanation(OutcomeClass o, double v_avg, double ripple_pp,
                                double v_sw_min, double v_sw_max,
                                double v_out_max, double v_target, double vsup);

}  // namespace bucksim
