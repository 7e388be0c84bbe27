#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bucksim {

enum class ControlMode { OpenLoop, PerCyclePi };
enum class TrojanTarget { None, Pmos, Nmos };
enum class TrojanGate { Or, Nor };

/// Power-stage component values. All values in SI units.
struct ConverterParams {
    double vsup = 1.2;        // supply rail [V]
    double l = 55.5e-6;       // inductance [H]
    double esr_l = 0.777;     // inductor series resistance [ohm]
    double c_out = 40e-9;     // output capacitance [F]
    double esr_c = 0.358;     // capacitor series resistance [ohm]
    double r_load = 100.0;    // resistive load [ohm]
    double i_load = 0.0;      // parallel constant current sink [A]
    double ron_p = 1.0;       // PMOS on-resistance [ohm]
    double ron_n = 1.0;       // NMOS on-resistance [ohm]
    double roff = 1e6;        // switch off-resistance [ohm]
    double c_sw = 374e-12;    // lumped switching-loss capacitance [F]

    bool operator==(const ConverterParams&) const = default;
};

/// Gate-drive timing and (optional) per-cycle regulation.
struct PwmParams {
    double freq = 1e6;          // switching frequency [Hz]
    double duty = 0.8481416666666667;  // commanded high-side conduction fraction
    double deadtime = 0.0;      // non-overlap interval at each edge [s]
    double driver_delay = 2e-9; // drive-chain transport delay [s]
    ControlMode control = ControlMode::OpenLoop;
    double vref = 1.0;          // regulation target [V]
    double kp = 0.1;            // duty per volt
    double ki = 0.02;           // duty per volt-cycle

    bool operator==(const PwmParams&) const = default;
};

/// Inserted OR/NOR lock gate and its activation window.
struct TrojanConfig {
    TrojanTarget target = TrojanTarget::None;
    TrojanGate gate = TrojanGate::Nor;
    double t_trigger = 500e-6;  // window start [s]
    double t_release = std::numeric_limits<double>::infinity();  // window end [s]
    // While triggered, also hold the complementary gate at its non-conducting
    // level. Reproduces the locked-FET-dominates conduction pattern for the
    // short-circuit lock cases, where resistive shoot-through would otherwise
    // pin the switch node at the ron divider.
    bool suppress_complement = false;
    // Places the lock between the parity-capacitor tap and the FET gate,
    // defeating the mitigation.
    bool downstream_of_cap = false;

    bool operator==(const TrojanConfig&) const = default;
};

/// AC-coupling countermeasure from the PWM generation root to the gate net.
/// c_par == 0 disables it.
struct MitigationConfig {
    double c_par = 0.0;    // parity capacitor [F]
    double r_drv = 10e3;   // logic-stage output resistance [ohm]
    double c_gate = 5e-12; // lumped gate-node capacitance [F]
    double t_slew = 1e-9;  // root-source rise/fall time [s]

    bool operator==(const MitigationConfig&) const = default;
};

struct SimParams {
    double t_end = 1000e-6;        // [s]
    double dt = 1e-9;              // fixed integration step [s]
    double record_start = 900e-6;  // start of measurement window [s]

    bool operator==(const SimParams&) const = default;
};

struct Scenario {
    ConverterParams converter;
    PwmParams pwm;
    TrojanConfig trojan;
    MitigationConfig mitigation;
    SimParams sim;
    std::string label;

    bool operator==(const Scenario&) const = default;
};

/// Parse failure with source position. line/column are 1-based; 0 means
/// "not tied to a position" (e.g. a post-parse invariant violation).
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_ = 0;
    int column_ = 0;
};

/// Baseline defaults (the values every unspecified key falls back to).
Scenario default_scenario();

/// Parse a scenario document. Unspecified keys take the baseline defaults;
/// unknown keys, malformed values, and invariant violations all throw
/// ScenarioError. Never crashes on arbitrary input.
Scenario parse_scenario(std::string_view text);

/// One description per violated invariant; empty when the scenario is valid.
std::vector<std::string> validate_scenario(const Scenario& s);

/// Canonical textual form; parse_scenario(render_scenario(s)) == s for any
/// scenario produced by parse_scenario.
std::string render_scenario(const Scenario& s);

/// True if `dotted` ("section.key") names a numeric scenario key.
bool is_numeric_key(std::string_view dotted);

/// Set a numeric key by dotted name, value given in the key's file units
/// (e.g. "mitigation.parity_cap_pf", 500). Throws ScenarioError for
/// unknown or non-numeric keys.
void set_numeric_key(Scenario& s, std::string_view dotted, double value);

}  // namespace bucksim
