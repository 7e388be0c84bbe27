#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bucksim/metrics.hpp"
#include "bucksim/scenario.hpp"
#include "bucksim/sim.hpp"

using namespace bucksim;

namespace {

Scenario load_cfg(const char* name) {
    std::ifstream is(std::filesystem::path(BUCKSIM_SCENARIO_DIR) / name,
                     std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str());
}

constexpr GateLevels kBothOff{false, false};
constexpr GateLevels kBothOn{true, true};
constexpr GateLevels kPmosOn{true, false};
constexpr GateLevels kNmosOn{false, true};

// Shortened baseline used by the run-level tests: 100 us of settling and a
// 50-period window keep a single case well under a second.
Scenario short_baseline() {
    Scenario s = default_scenario();
    s.sim.t_end = 150e-6;
    s.sim.record_start = 100e-6;
    return s;
}

// Trapezoid-quadrature mean of one column (matches the integrator's order).
double trap_mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) acc += v[k];
    acc += 0.5 * (v.back() - v.front());
    return acc / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("switch node voltage from the conductance divider") {
    const ConverterParams c;  // ron 1 Ohm, roff 1 MOhm, vsup 1.2 V

    // PMOS conducting, NMOS off, 10 mA of inductor current.
    CHECK(switch_node_voltage(c, kPmosOn, 0.01) ==
          doctest::Approx(1.190).epsilon(1e-4));
    CHECK(switch_node_voltage(c, kPmosOn, 0.01) ==
          doctest::Approx((1.2 - 0.01) / (1.0 + 1e-6)).epsilon(1e-12));

    // Both off: the inductor forces its current through the off resistances.
    CHECK(switch_node_voltage(c, kBothOff, 0.01) ==
          doctest::Approx(-4999.4).epsilon(1e-9));

    // Symmetry: no current and equal conductances centre the node.
    CHECK(switch_node_voltage(c, kBothOn, 0.0) ==
          doctest::Approx(0.6).epsilon(1e-12));
    CHECK(switch_node_voltage(c, kBothOff, 0.0) ==
          doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("output voltage from the ESR divider") {
    ConverterParams c;
    // Self-consistent fixed point: 10 mA into 100 Ohm gives 1 V exactly.
    CHECK(output_voltage(c, 1.0, 0.01) == doctest::Approx(1.0).epsilon(1e-12));

    c.esr_c = 0.0;
    CHECK(output_voltage(c, 0.73, 0.05) == 0.73);

    c = ConverterParams{};
    c.r_load = 1e18;
    c.i_load = 0.01;
    CHECK(output_voltage(c, 0.9, 0.01) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("supply current flows only through the high side") {
    const ConverterParams c;
    const double v_sw = switch_node_voltage(c, kPmosOn, 0.01);
    CHECK(supply_current(c, kPmosOn, 0.01) ==
          doctest::Approx((c.vsup - v_sw) / c.ron_p).epsilon(1e-12));
    // Off switches leak only microamps.
    CHECK(std::fabs(supply_current(c, kBothOff, 0.0)) < 1e-5);
}

TEST_CASE("derivatives at the documented operating point") {
    const ConverterParams c;
    const StateDeriv d = derivatives(c, kPmosOn, 0.01, 1.0);

    // Cross-derived from the node voltages: di_l/dt = (v_sw - i_l esr_l - v_out)/L.
    const double v_sw = switch_node_voltage(c, kPmosOn, 0.01);
    const double v_out = output_voltage(c, 1.0, 0.01);
    CHECK(d.di_l ==
          doctest::Approx((v_sw - 0.01 * c.esr_l - v_out) / c.l).epsilon(1e-9));
    CHECK(d.di_l == doctest::Approx(3283.4).epsilon(1e-4));

    // 10 mA exactly feeds the 1 V / 100 Ohm load: no capacitor current.
    CHECK(std::fabs(d.dv_c) < 1e-9);

    // Sign check: surplus inductor current charges the capacitor.
    CHECK(derivatives(c, kPmosOn, 0.02, 1.0).dv_c > 0.0);
    // Equilibrium of the current branch.
    const StateDeriv eq = derivatives(c, kNmosOn, 0.0, 0.0);
    CHECK(std::fabs(eq.di_l) < 1.0);  // near zero, both quantities tiny
}

TEST_CASE("zero-dt step is the identity map") {
    const ConverterParams c;
    const StepCoeffs sc = make_step_coeffs(c, kPmosOn, 0.0);
    CHECK(sc.m00 == 1.0);
    CHECK(sc.m01 == 0.0);
    CHECK(sc.m10 == 0.0);
    CHECK(sc.m11 == 1.0);
    CHECK(sc.k0 == 0.0);
    CHECK(sc.k1 == 0.0);
}

TEST_CASE("one trapezoidal step matches the RC exponential to third order") {
    // Opening the inductor branch (huge L) leaves a pure RC relaxation of
    // v_c through r_load + esr_c with tau = 4.01432 us.
    ConverterParams c;
    c.l = 1e6;
    const double tau = c.c_out * (c.r_load + c.esr_c);
    const double dt = 1e-9;
    const StepCoeffs sc = make_step_coeffs(c, kBothOff, dt);

    double i_l = 0.0;
    double v_c = 1.2;
    sc.apply(i_l, v_c);
    const double exact = 1.2 * std::exp(-dt / tau);
    CHECK(std::fabs(v_c - exact) / exact < std::pow(dt / tau, 3.0));
}

TEST_CASE("multi-step decay follows the exponential envelope") {
    ConverterParams c;
    c.l = 1e6;
    const double tau = c.c_out * (c.r_load + c.esr_c);
    const double dt = 1e-9;
    const StepCoeffs sc = make_step_coeffs(c, kBothOff, dt);

    double i_l = 0.0;
    double v_c = 1.2;
    const long n = std::lround(tau / dt);  // about one time constant
    for (long k = 0; k < n; ++k) sc.apply(i_l, v_c);
    const double exact = 1.2 * std::exp(-static_cast<double>(n) * dt / tau);
    CHECK(v_c == doctest::Approx(exact).epsilon(1e-7));
    CHECK(v_c == doctest::Approx(1.2 / 2.718281828).epsilon(1e-3));
}

TEST_CASE("step map is linear when the sources vanish") {
    ConverterParams c;
    c.vsup = 0.0;
    c.i_load = 0.0;
    const StepCoeffs sc = make_step_coeffs(c, kPmosOn, 1e-9);
    CHECK(sc.k0 == 0.0);
    CHECK(sc.k1 == 0.0);

    double i1 = 0.01, v1 = 1.0;
    double i2 = -0.003, v2 = 0.4;
    double ic = 2.0 * i1 - 1.5 * i2;
    double vc = 2.0 * v1 - 1.5 * v2;
    sc.apply(i1, v1);
    sc.apply(i2, v2);
    sc.apply(ic, vc);
    CHECK(ic == doctest::Approx(2.0 * i1 - 1.5 * i2).epsilon(1e-12));
    CHECK(vc == doctest::Approx(2.0 * v1 - 1.5 * v2).epsilon(1e-12));
}

TEST_CASE("pwm command windows across one period") {
    PwmParams p;  // 1 MHz
    p.deadtime = 20e-9;
    const double T = 1e-6;

    // Inside the PMOS window.
    CHECK(pwm_levels(0.1 * T, p, 0.8333) == kPmosOn);
    // Inside the NMOS window, past the dead band.
    CHECK(pwm_levels(0.9 * T, p, 0.8333) == kNmosOn);
    // Inside the dead band after the falling PMOS edge.
    CHECK(pwm_levels(0.8333 * T + 10e-9, p, 0.8333) == kBothOff);
    // Dead band before the wrap back to PMOS.
    CHECK(pwm_levels(T - 10e-9, p, 0.8333) == kBothOff);
    // Phase wraps cleanly into later periods.
    CHECK(pwm_levels(37 * T + 0.1 * T, p, 0.8333) == kPmosOn);
    CHECK(pwm_levels(37 * T + 0.9 * T, p, 0.8333) == kNmosOn);

    // current_duty overrides the configured duty.
    CHECK(pwm_levels(0.5 * T, p, 0.3) == kNmosOn);
    CHECK(pwm_levels(0.5 * T, p, 0.8) == kPmosOn);

    // With positive deadtime the commands never overlap.
    for (int k = 0; k < 2000; ++k) {
        const GateLevels g = pwm_levels(k * (T / 2000.0), p, 0.8333);
        CHECK_FALSE((g.pmos_on && g.nmos_on));
    }
}

TEST_CASE("simulate fills a coherent trace set") {
    Scenario s = short_baseline();
    const SimResult r = simulate(s);
    const TraceSet& tr = r.traces;

    const std::size_t n = tr.size();
    CHECK(n == 50001);  // 50 us window at 1 ns plus the closing sample
    CHECK(tr.v_sw.size() == n);
    CHECK(tr.i_l.size() == n);
    CHECK(tr.v_c.size() == n);
    CHECK(tr.v_gate_p.size() == n);
    CHECK(tr.v_gate_n.size() == n);
    CHECK(tr.trig.size() == n);
    CHECK(tr.i_supply.size() == n);
    CHECK(tr.t0 == doctest::Approx(100e-6).epsilon(1e-12));
    CHECK(tr.dt == 1e-9);

    for (std::size_t k = 0; k < n; ++k) {
        CHECK(std::isfinite(tr.v_out[k]));
        CHECK(tr.trig[k] == 0);  // no trojan configured
    }

    // Gate columns mirror the logic rails when no parity capacitor is fitted.
    for (std::size_t k = 0; k < n; ++k) {
        const bool p_rail = tr.v_gate_p[k] == 0.0 || tr.v_gate_p[k] == s.converter.vsup;
        const bool n_rail = tr.v_gate_n[k] == 0.0 || tr.v_gate_n[k] == s.converter.vsup;
        CHECK(p_rail);
        CHECK(n_rail);
    }
}

TEST_CASE("simulation starts from zero state") {
    Scenario s = default_scenario();
    s.sim.t_end = 50e-6;
    s.sim.record_start = 0.0;
    const SimResult r = simulate(s);
    CHECK(r.traces.i_l.front() == 0.0);
    CHECK(r.traces.v_c.front() == 0.0);
    CHECK(r.traces.v_out.front() == 0.0);
}

TEST_CASE("zero duty transfers no energy") {
    Scenario s = short_baseline();
    s.pwm.duty = 0.0;
    const SimResult r = simulate(s);
    const SteadyStateMetrics m = measure(r.traces, s);
    CHECK(std::fabs(m.v_avg) < 1e-4);
    CHECK(std::fabs(m.v_out_max) < 1e-4);
}

TEST_CASE("deadtime prevents shoot-through in nominal operation") {
    Scenario s = short_baseline();
    s.pwm.deadtime = 20e-9;
    const SimResult r = simulate(s);
    const double half = 0.5 * s.converter.vsup;
    for (std::size_t k = 0; k < r.traces.size(); ++k) {
        const bool p_on = r.traces.v_gate_p[k] < half;
        const bool n_on = r.traces.v_gate_n[k] > half;
        CHECK_FALSE((p_on && n_on));
    }
    CHECK(measure(r.traces, s).shoot_through_energy == 0.0);
}

TEST_CASE("identical scenarios give bit-identical results") {
    const Scenario s = short_baseline();
    const SimResult a = simulate(s);
    const SimResult b = simulate(s);
    CHECK(a.traces.v_out == b.traces.v_out);
    CHECK(a.traces.v_sw == b.traces.v_sw);
    CHECK(a.traces.i_l == b.traces.i_l);
    CHECK(a.traces.v_c == b.traces.v_c);
    CHECK(a.traces.v_gate_p == b.traces.v_gate_p);
    CHECK(a.traces.v_gate_n == b.traces.v_gate_n);
    CHECK(a.traces.i_supply == b.traces.i_supply);
    CHECK(a.energy.e_in == b.energy.e_in);
    CHECK(a.energy.e_load == b.energy.e_load);
    CHECK(a.energy.e_dissipated == b.energy.e_dissipated);
}

TEST_CASE("energy account closes far inside the 1 % budget") {
    for (const char* name : {"baseline.cfg", "attack_nmos_nor.cfg", "mitigated.cfg"}) {
        INFO("scenario: ", name);
        Scenario s = load_cfg(name);
        s.sim.t_end = 150e-6;
        s.sim.record_start = 100e-6;
        if (s.trojan.target != TrojanTarget::None) s.trojan.t_trigger = 60e-6;
        const SimResult r = simulate(s);
        const double through =
            std::max(r.energy.e_in, r.energy.e_load + r.energy.e_dissipated);
        CHECK(std::fabs(r.energy.imbalance()) <= 1e-9 * through + 1e-18);
    }
}

TEST_CASE("energy ledger agrees with quadrature over the traces") {
    const Scenario s = short_baseline();
    const SimResult r = simulate(s);
    // Midpoint load energy recomputed from the recorded samples.
    double e_load = 0.0;
    for (std::size_t k = 0; k + 1 < r.traces.size(); ++k) {
        const double vm = 0.5 * (r.traces.v_out[k] + r.traces.v_out[k + 1]);
        e_load += r.traces.dt *
                  (vm * vm / s.converter.r_load + vm * s.converter.i_load);
    }
    CHECK(e_load == doctest::Approx(r.energy.e_load).epsilon(1e-9));
}

TEST_CASE("runaway component values raise SimDivergence") {
    Scenario s = default_scenario();
    s.converter.esr_l = -1000.0;  // negative resistance: unstable by design
    s.sim.t_end = 100e-6;
    s.sim.record_start = 50e-6;
    CHECK_THROWS_AS((void)simulate(s), SimDivergence);
    try {
        (void)simulate(s);
    } catch (const SimDivergence& e) {
        CHECK(std::string(e.what()).find("non-finite state at t =") != std::string::npos);
    }
}

TEST_CASE("halving dt quarters the windowed mean error") {
    // Startup window: the decaying transient carries the integrator error,
    // while the periodic steady state is pinned by charge balance at any dt.
    // Duty 0.848 puts every switching edge on all four grids.
    const auto mean_at = [](double dt) {
        Scenario s = default_scenario();
        s.pwm.duty = 0.848;
        s.pwm.driver_delay = 0.0;
        s.sim.t_end = 100e-6;
        s.sim.record_start = 0.0;
        s.sim.dt = dt;
        return trap_mean(simulate(s).traces.v_out);
    };
    const double v4 = mean_at(4e-9);
    const double v2 = mean_at(2e-9);
    const double v1 = mean_at(1e-9);
    const double v05 = mean_at(0.5e-9);
    const double ref = v05 + (v05 - v1) / 3.0;  // Richardson limit
    const double r42 = (v4 - ref) / (v2 - ref);
    const double r21 = (v2 - ref) / (v1 - ref);
    CHECK(r42 > 3.5);
    CHECK(r42 < 4.5);
    CHECK(r21 > 3.5);
    CHECK(r21 < 4.5);
}

TEST_CASE("locked PMOS drives the output toward the rail") {
    const Scenario s = load_cfg("quick.cfg");
    const SimResult r = simulate(s);
    const SteadyStateMetrics m = measure(r.traces, s);
    CHECK(m.v_avg > 1.15);
    CHECK(m.v_avg < 1.20);
    // The recorded window sits entirely inside the trigger window.
    for (std::size_t k = 0; k < r.traces.size(); ++k) CHECK(r.traces.trig[k] == 1);
}

TEST_CASE("per-cycle PI control settles on the reference") {
    Scenario s = default_scenario();
    s.pwm.control = ControlMode::PerCyclePi;
    s.pwm.duty = 0.5;  // start well away from the solution
    s.sim.t_end = 500e-6;
    s.sim.record_start = 400e-6;
    const SimResult r = simulate(s);
    const SteadyStateMetrics m = measure(r.traces, s);
    CHECK(m.v_avg == doctest::Approx(s.pwm.vref).epsilon(5e-3));
    // One duty entry per started cycle, clamped to [0,1].
    CHECK(r.duty_per_cycle.size() >= 500);
    for (double d : r.duty_per_cycle) {
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
    }
}

TEST_CASE("mitigated trojan-free run keeps the commanded duty") {
    Scenario s = short_baseline();
    s.mitigation.c_par = 500e-12;
    const SimResult r = simulate(s);
    const SteadyStateMetrics m = measure(r.traces, s);
    CHECK(std::fabs(m.duty_effective - s.pwm.duty) / s.pwm.duty < 0.01);
}

TEST_CASE("a zero parity capacitor bypasses the gate-node model") {
    Scenario a = short_baseline();
    Scenario b = short_baseline();
    // Exotic auxiliary values must not matter when c_par = 0.
    b.mitigation.r_drv = 77e3;
    b.mitigation.c_gate = 9e-12;
    b.mitigation.t_slew = 3e-9;
    const SimResult ra = simulate(a);
    const SimResult rb = simulate(b);
    CHECK(ra.traces.v_out == rb.traces.v_out);
    CHECK(ra.traces.v_sw == rb.traces.v_sw);
    CHECK(ra.traces.i_l == rb.traces.i_l);
    CHECK(ra.traces.v_gate_p == rb.traces.v_gate_p);
    CHECK(ra.traces.v_gate_n == rb.traces.v_gate_n);
}

TEST_CASE("mitigated locked gate still crosses threshold twice per period") {
    // With the parity capacitor across a triggered lock, the inserted gate
    // degenerates into a delay: one rising and one falling crossing per period.
    Scenario s = default_scenario();
    s.trojan.target = TrojanTarget::Pmos;
    s.trojan.gate = TrojanGate::Nor;
    s.trojan.suppress_complement = true;
    s.trojan.t_trigger = 60e-6;
    s.mitigation.c_par = 500e-12;
    s.sim.t_end = 150e-6;
    s.sim.record_start = 100e-6;
    const SimResult r = simulate(s);

    const double th = 0.5 * s.converter.vsup;
    const long steps_per_period = std::lround(1.0 / (s.pwm.freq * r.traces.dt));
    const std::size_t n_periods = (r.traces.size() - 1) / steps_per_period;
    REQUIRE(n_periods >= 40);
    for (std::size_t p = 0; p < n_periods; ++p) {
        int rising = 0;
        int falling = 0;
        const std::size_t base = p * steps_per_period;
        for (long k = 0; k < steps_per_period; ++k) {
            const double prev = r.traces.v_gate_p[base + k];
            const double next = r.traces.v_gate_p[base + k + 1];
            if (prev < th && next >= th) ++rising;
            if (prev >= th && next < th) ++falling;
        }
        CHECK(rising == 1);
        CHECK(falling == 1);
    }
}
