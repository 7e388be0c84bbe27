#include "bucksim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "bucksim/parity.hpp"
#include "bucksim/trojan.hpp"

namespace bucksim {
namespace {

struct Conducts {
    double gp = 0.0;
    double gn = 0.0;
};

Conducts conductances(const ConverterParams& c, GateLevels g) {
    return {g.pmos_on ? 1.0 / c.ron_p : 1.0 / c.roff,
            g.nmos_on ? 1.0 / c.ron_n : 1.0 / c.roff};
}

/// d[i_l, v_c]/dt = A x + u for one conduction combination.  The switch pair
/// is folded into a Thevenin source gp*vsup/(gp+gn) behind 1/(gp+gn), and the
/// output divider v_out = alpha*v_c + beta*i_l + gamma eliminates v_out.
struct Affine {
    double a00, a01, a10, a11;
    double u0, u1;
};

Affine build_affine(const ConverterParams& c, GateLevels g) {
    const auto [gp, gn] = conductances(c, g);
    const double r_sw = 1.0 / (gp + gn);
    const double alpha = 1.0 / (1.0 + c.esr_c / c.r_load);
    const double beta = alpha * c.esr_c;
    const double gamma = -alpha * c.esr_c * c.i_load;
    Affine f;
    f.a00 = -(r_sw + c.esr_l + beta) / c.l;
    f.a01 = -alpha / c.l;
    f.u0 = (gp * c.vsup * r_sw - gamma) / c.l;
    f.a10 = (1.0 - beta / c.r_load) / c.c_out;
    f.a11 = -alpha / (c.r_load * c.c_out);
    f.u1 = (-gamma / c.r_load - c.i_load) / c.c_out;
    return f;
}

GateLevels combo_levels(int i) { return {(i & 2) != 0, (i & 1) != 0}; }

double stored_energy(const ConverterParams& c, double i_l, double v_c) {
    return 0.5 * c.l * i_l * i_l + 0.5 * c.c_out * v_c * v_c;
}

}  // namespace

GateLevels pwm_levels(double t, const PwmParams& p, double current_duty) {
    const double period = 1.0 / p.freq;
    const double phase = t - std::floor(t * p.freq) * period;
    const double t_on = current_duty * period;
    GateLevels g;
    g.pmos_on = phase < t_on;
    g.nmos_on = phase >= t_on + p.deadtime && phase < period - p.deadtime;
    return g;
}

double switch_node_voltage(const ConverterParams& c, GateLevels g, double i_l) {
    const auto [gp, gn] = conductances(c, g);
    return (gp * c.vsup - i_l) / (gp + gn);
}

double output_voltage(const ConverterParams& c, double v_c, double i_l) {
    return (v_c + c.esr_c * (i_l - c.i_load)) / (1.0 + c.esr_c / c.r_load);
}

double supply_current(const ConverterParams& c, GateLevels g, double i_l) {
    const auto [gp, gn] = conductances(c, g);
    const double v_sw = (gp * c.vsup - i_l) / (gp + gn);
    return gp * (c.vsup - v_sw);
}

StateDeriv derivatives(const ConverterParams& c, GateLevels g, double i_l,
                       double v_c) {
    const Affine f = build_affine(c, g);
    return {f.a00 * i_l + f.a01 * v_c + f.u0,
            f.a10 * i_l + f.a11 * v_c + f.u1};
}

StepCoeffs make_step_coeffs(const ConverterParams& c, GateLevels g, double dt) {
    const Affine f = build_affine(c, g);
    const double h = 0.5 * dt;
    const double p00 = 1.0 - h * f.a00;
    const double p01 = -h * f.a01;
    const double p10 = -h * f.a10;
    const double p11 = 1.0 - h * f.a11;
    const double det = p00 * p11 - p01 * p10;
    const double i00 = p11 / det;
    const double i01 = -p01 / det;
    const double i10 = -p10 / det;
    const double i11 = p00 / det;
    const double q00 = 1.0 + h * f.a00;
    const double q01 = h * f.a01;
    const double q10 = h * f.a10;
    const double q11 = 1.0 + h * f.a11;
    StepCoeffs s;
    s.m00 = i00 * q00 + i01 * q10;
    s.m01 = i00 * q01 + i01 * q11;
    s.m10 = i10 * q00 + i11 * q10;
    s.m11 = i10 * q01 + i11 * q11;
    s.k0 = dt * (i00 * f.u0 + i01 * f.u1);
    s.k1 = dt * (i10 * f.u0 + i11 * f.u1);
    return s;
}

SimResult simulate(const Scenario& s) {
    const ConverterParams& cv = s.converter;
    const PwmParams& pw = s.pwm;
    const TrojanConfig& tj = s.trojan;
    const MitigationConfig& mt = s.mitigation;
    const double dt = s.sim.dt;

    const long long n_total = llround(s.sim.t_end / dt);
    const long long s_rec = llround(s.sim.record_start / dt);
    const double period_steps = 1.0 / (pw.freq * dt);
    const long long n_dead = llround(pw.deadtime / dt);
    const long long n_delay = llround(pw.driver_delay / dt);

    StepCoeffs combo[4];
    double gpa[4];
    double gna[4];
    for (int i = 0; i < 4; ++i) {
        combo[i] = make_step_coeffs(cv, combo_levels(i), dt);
        const auto gg = conductances(cv, combo_levels(i));
        gpa[i] = gg.gp;
        gna[i] = gg.gn;
    }
    const double alpha = 1.0 / (1.0 + cv.esr_c / cv.r_load);
    const double beta = alpha * cv.esr_c;
    const double gamma = -alpha * cv.esr_c * cv.i_load;

    // With no parity capacitor the gate nets just mirror the logic levels;
    // the RC node model and threshold comparators engage only when the
    // mitigation hardware is present.
    const bool mitigated = mt.c_par > 0.0;
    const GateNodeCoeffs gate = make_gate_node_coeffs(mt, dt);
    const double slew_rate = cv.vsup / mt.t_slew;
    const double threshold = 0.5 * cv.vsup;

    CircuitState x;
    x.v_gate_p = cv.vsup;  // both switches held off until the drivers act
    x.v_gate_n = 0.0;
    bool cmp_p_high = true;
    bool cmp_n_high = false;
    SlewTracker root_p{cv.vsup};
    SlewTracker root_n{0.0};

    // Raw commands pass through a short delay line modelling the driver
    // chain; the trojan and the trigger act on the delayed stream.
    std::vector<GateLevels> ring(static_cast<std::size_t>(std::max<long long>(n_delay, 1)));

    long long cycle = 0;
    long long cyc_start = 0;
    long long cyc_next = llround(period_steps);
    double duty = pw.duty;
    long long n_on = llround(duty * period_steps);
    double pi_accum = 0.0;
    double vout_sum = 0.0;

    SimResult res;
    res.duty_per_cycle.push_back(duty);
    TraceSet& tr = res.traces;
    tr.t0 = static_cast<double>(s_rec) * dt;
    tr.dt = dt;
    tr.reserve(static_cast<std::size_t>(n_total - s_rec + 1));
    EnergyAccount& en = res.energy;

    for (long long k = 0; k <= n_total; ++k) {
        const double t = static_cast<double>(k) * dt;

        if (k == cyc_next) {
            const double v_mean = vout_sum / static_cast<double>(cyc_next - cyc_start);
            vout_sum = 0.0;
            if (pw.control == ControlMode::PerCyclePi) {
                const double err = pw.vref - v_mean;
                pi_accum += err;
                duty = std::clamp(duty + pw.kp * err + pw.ki * pi_accum, 0.0, 1.0);
            }
            ++cycle;
            cyc_start = cyc_next;
            cyc_next = llround(static_cast<double>(cycle + 1) * period_steps);
            n_on = llround(duty * period_steps);
            res.duty_per_cycle.push_back(duty);
        }

        const long long r = k - cyc_start;
        GateLevels raw;
        raw.pmos_on = r < n_on;
        raw.nmos_on = r >= n_on + n_dead && r < (cyc_next - cyc_start) - n_dead;

        GateLevels fed = raw;
        if (n_delay > 0) {
            GateLevels& slot = ring[static_cast<std::size_t>(k % n_delay)];
            fed = slot;
            slot = raw;
        }

        const bool trig = trigger_active(t, tj);
        const GateLevels driven = apply_trojan(fed, t, tj);
        const GateLevels clean = tj.downstream_of_cap ? driven : raw;

        // Conduction for this step: comparators looking at the gate nodes
        // as they stand at t, or the driven logic directly.
        GateLevels drive = driven;
        if (mitigated) {
            cmp_p_high = comparator_update(cmp_p_high, x.v_gate_p, threshold,
                                           kComparatorHysteresis);
            cmp_n_high = comparator_update(cmp_n_high, x.v_gate_n, threshold,
                                           kComparatorHysteresis);
            drive = GateLevels{!cmp_p_high, cmp_n_high};
        } else {
            x.v_gate_p = driven.pmos_on ? 0.0 : cv.vsup;
            x.v_gate_n = driven.nmos_on ? cv.vsup : 0.0;
        }
        const int ci = (drive.pmos_on ? 2 : 0) | (drive.nmos_on ? 1 : 0);

        const double v_out_k = alpha * x.v_c + beta * x.i_l + gamma;

        if (k >= s_rec) {
            const double v_sw_k = (gpa[ci] * cv.vsup - x.i_l) / (gpa[ci] + gna[ci]);
            tr.v_out.push_back(v_out_k);
            tr.v_sw.push_back(v_sw_k);
            tr.i_l.push_back(x.i_l);
            tr.v_c.push_back(x.v_c);
            tr.v_gate_p.push_back(x.v_gate_p);
            tr.v_gate_n.push_back(x.v_gate_n);
            tr.trig.push_back(trig ? 1 : 0);
            tr.i_supply.push_back(gpa[ci] * (cv.vsup - v_sw_k));
            if (k == s_rec) en.e_stored_start = stored_energy(cv, x.i_l, x.v_c);
        }

        if (k == n_total) break;

        vout_sum += v_out_k;

        const double i_old = x.i_l;
        const double v_old = x.v_c;
        combo[ci].apply(x.i_l, x.v_c);
        if (!(std::isfinite(x.i_l) && std::isfinite(x.v_c))) {
            throw SimDivergence("non-finite state at t = " + std::to_string(t) + " s");
        }

        if (k >= s_rec) {
            // Midpoint-state accounting closes exactly for the trapezoidal
            // update of a piecewise-affine system.
            const double im = 0.5 * (i_old + x.i_l);
            const double vm = 0.5 * (v_old + x.v_c);
            const double v_sw_m = (gpa[ci] * cv.vsup - im) / (gpa[ci] + gna[ci]);
            const double v_out_m = alpha * vm + beta * im + gamma;
            const double i_c_m = im - v_out_m / cv.r_load - cv.i_load;
            const double v_drop = cv.vsup - v_sw_m;
            en.e_in += dt * cv.vsup * gpa[ci] * v_drop;
            en.e_load += dt * (v_out_m * v_out_m / cv.r_load + v_out_m * cv.i_load);
            en.e_dissipated += dt * (gpa[ci] * v_drop * v_drop + gna[ci] * v_sw_m * v_sw_m +
                                     im * im * cv.esr_l + i_c_m * i_c_m * cv.esr_c);
        }

        if (mitigated) {
            const double target_p = clean.pmos_on ? 0.0 : cv.vsup;
            const double target_n = clean.nmos_on ? cv.vsup : 0.0;
            const double logic_p = driven.pmos_on ? 0.0 : cv.vsup;
            const double logic_n = driven.nmos_on ? cv.vsup : 0.0;
            x.v_gate_p = gate.step(x.v_gate_p, logic_p,
                                   root_p.advance(target_p, slew_rate, dt));
            x.v_gate_n = gate.step(x.v_gate_n, logic_n,
                                   root_n.advance(target_n, slew_rate, dt));
        }
    }

    en.e_stored_end = stored_energy(cv, x.i_l, x.v_c);
    return res;
}

}  // namespace bucksim
