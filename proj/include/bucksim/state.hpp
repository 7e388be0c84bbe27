#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace bucksim {

/// Dynamic state of the power stage.  Gate node voltages are carried even
/// when no parity capacitor is fitted; they then track the logic levels
/// through the slew-limited driver model.
struct CircuitState {
    double i_l = 0.0;       // inductor current [A]
    double v_c = 0.0;       // capacitor voltage behind its ESR [V]
    double v_gate_p = 0.0;  // PMOS gate node [V]
    double v_gate_n = 0.0;  // NMOS gate node [V]
};

/// Conduction state of the half bridge after gate comparators.
/// `pmos_on` refers to the channel conducting, not to the gate level
/// (the PMOS is active low).
struct GateLevels {
    bool pmos_on = false;
    bool nmos_on = false;

    bool operator==(const GateLevels&) const = default;
};

/// Uniformly sampled waveforms from one run.  Sample k corresponds to
/// t = t0 + k*dt; all columns have identical length.
struct TraceSet {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> v_out;
    std::vector<double> v_sw;
    std::vector<double> i_l;
    std::vector<double> v_c;
    std::vector<double> v_gate_p;
    std::vector<double> v_gate_n;
    std::vector<std::uint8_t> trig;
    std::vector<double> i_supply;

    std::size_t size() const { return v_out.size(); }

    void reserve(std::size_t n) {
        v_out.reserve(n);
        v_sw.reserve(n);
        i_l.reserve(n);
        v_c.reserve(n);
        v_gate_p.reserve(n);
        v_gate_n.reserve(n);
        trig.reserve(n);
        i_supply.reserve(n);
    }
};

/// Energy ledger integrated over the recording window with midpoint states,
/// which closes exactly for the trapezoidal discretisation.
struct EnergyAccount {
    double e_in = 0.0;        // delivered by the supply through the PMOS [J]
    double e_load = 0.0;      // absorbed by load resistor and current sink [J]
    double e_dissipated = 0.0;  // switch, ESR losses [J]
    double e_stored_start = 0.0;
    double e_stored_end = 0.0;

    double imbalance() const {
        return e_in - e_load - e_dissipated - (e_stored_end - e_stored_start);
    }
};

}  // namespace bucksim
