#include "bucksim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <stdexcept>

namespace bucksim {
namespace {

std::string fmt(const char* pattern, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

}  // namespace

std::string_view outcome_name(OutcomeClass o) {
    switch (o) {
        case OutcomeClass::Nominal: return "Nominal";
        case OutcomeClass::Degraded: return "Degraded";
        case OutcomeClass::Overvolt: return "Overvolt";
        case OutcomeClass::SevereOvervolt: return "SevereOvervolt";
        case OutcomeClass::Disabled: return "Disabled";
    }
    return "Degraded";
}

SteadyStateMetrics measure(const TraceSet& tr, const Scenario& s) {
    const std::size_t n = tr.size();
    if (n < 2 || static_cast<double>(n - 1) * tr.dt * s.pwm.freq < 20.0) {
        throw std::invalid_argument("measurement window shorter than 20 periods");
    }
    const std::size_t n_mean = n - 1;

    SteadyStateMetrics m;
    double sum_vout = 0.0;
    double sum_il = 0.0;
    double sum_pout = 0.0;
    double sum_isup = 0.0;
    double cross_energy = 0.0;
    std::size_t low_gate = 0;
    const double half_vsup = 0.5 * s.converter.vsup;
    for (std::size_t k = 0; k < n_mean; ++k) {
        const double vo = tr.v_out[k];
        sum_vout += vo;
        sum_il += tr.i_l[k];
        sum_pout += vo * (vo / s.converter.r_load + s.converter.i_load);
        sum_isup += tr.i_supply[k];
        const bool p_on = tr.v_gate_p[k] < half_vsup;
        const bool n_on = tr.v_gate_n[k] > half_vsup;
        if (p_on) ++low_gate;
        if (p_on && n_on) {
            // Both conducting: the low-side current v_sw/ron_n is carried
            // straight from the supply to ground.
            cross_energy += tr.dt * s.converter.vsup * tr.v_sw[k] / s.converter.ron_n;
        }
    }
    m.v_avg = sum_vout / static_cast<double>(n_mean);
    m.i_l_avg = sum_il / static_cast<double>(n_mean);
    m.p_out = sum_pout / static_cast<double>(n_mean);
    m.duty_effective = static_cast<double>(low_gate) / static_cast<double>(n_mean);
    m.shoot_through_energy = cross_energy;

    const double p_gate = s.converter.c_sw * s.converter.vsup * s.converter.vsup *
                          s.pwm.freq;
    m.p_in = s.converter.vsup * sum_isup / static_cast<double>(n_mean) + p_gate;
    m.efficiency = m.p_in > 0.0 ? m.p_out / m.p_in : 0.0;

    const auto [vo_min_it, vo_max_it] = std::minmax_element(tr.v_out.begin(), tr.v_out.end());
    const auto [sw_min_it, sw_max_it] = std::minmax_element(tr.v_sw.begin(), tr.v_sw.end());
    m.ripple_pp = *vo_max_it - *vo_min_it;
    m.v_out_min = *vo_min_it;
    m.v_out_max = *vo_max_it;
    m.v_sw_min = *sw_min_it;
    m.v_sw_max = *sw_max_it;

    const double v_target = s.pwm.vref;
    m.outcome = classify(m.v_avg, m.ripple_pp, m.v_sw_min, m.v_sw_max,
                         m.v_out_max, v_target, s.converter.vsup);
    m.explanation = outcome_explanation(m.outcome, m.v_avg, m.ripple_pp,
                                        m.v_sw_min, m.v_sw_max, m.v_out_max,
                                        v_target, s.converter.vsup);
    return m;
}

RippleEstimate ripple_analytic(const ConverterParams& c, double freq,
                               double duty, double v_target) {
    RippleEstimate r;
    r.delta_i = v_target * (1.0 - duty) / (c.l * freq);
    r.cap_term = r.delta_i / (8.0 * c.c_out * freq);
    r.esr_term = r.delta_i * c.esr_c;
    r.total = r.cap_term + r.esr_term;
    return r;
}

RippleEstimate ripple_analytic(const Scenario& s) {
    return ripple_analytic(s.converter, s.pwm.freq, s.pwm.duty, s.pwm.vref);
}

double duty_for_target(const ConverterParams& c, double v_target) {
    const double i_out = v_target / c.r_load + c.i_load;
    double d = v_target / c.vsup;
    for (int pass = 0; pass < 3; ++pass) {
        const double ron_avg = d * c.ron_p + (1.0 - d) * c.ron_n;
        d = (v_target + i_out * (c.esr_l + ron_avg)) / c.vsup;
    }
    if (!(d >= 0.0 && d <= 1.0)) {
        throw std::domain_error(fmt("duty target unreachable: %.4g V needs duty %.4g",
                                    v_target, d));
    }
    return d;
}

OutcomeClass classify(double v_avg, double ripple_pp, double v_sw_min,
                      double v_sw_max, double v_out_max, double v_target,
                      double vsup) {
    if (v_avg < 0.3 * v_target) return OutcomeClass::Disabled;
    if (std::max(std::fabs(v_sw_min), v_sw_max) >= 2.0 * vsup ||
        v_out_max >= 1.5 * v_target) {
        return OutcomeClass::SevereOvervolt;
    }
    if (v_avg >= 1.08 * v_target) return OutcomeClass::Overvolt;
    if (std::fabs(v_avg - v_target) <= 0.05 * v_target &&
        ripple_pp <= 0.05 * v_target) {
        return OutcomeClass::Nominal;
    }
    return OutcomeClass::Degraded;
}

std::string outcome_explanation(OutcomeClass o, double v_avg, double ripple_pp,
                                double v_sw_min, double v_sw_max,
                                double v_out_max, double v_target, double vsup) {
    switch (o) {
        case OutcomeClass::Nominal:
            return fmt("output regulated at %.4g V with %.3g mVpp ripple",
                       v_avg, ripple_pp * 1e3);
        case OutcomeClass::Degraded:
            return fmt("output %.4g V misses the %.4g V target band",
                       v_avg, v_target);
        case OutcomeClass::Overvolt:
            return fmt("average output %.4g V exceeds 1.08x the %.4g V target",
                       v_avg, v_target);
        case OutcomeClass::SevereOvervolt:
            if (std::max(std::fabs(v_sw_min), v_sw_max) >= 2.0 * vsup) {
                return fmt("switch node excursion to %.4g V breaches twice the"
                           " %.4g V supply",
                           std::fabs(v_sw_min) > v_sw_max ? v_sw_min : v_sw_max,
                           vsup);
            }
            return fmt("output peak %.4g V breaches 1.5x the %.4g V target",
                       v_out_max, v_target);
        case OutcomeClass::Disabled:
            return fmt("average output %.4g V sits below 30%% of the %.4g V"
                       " target",
                       v_avg, v_target);
    }
    return "unclassified";
}

}  // namespace bucksim
