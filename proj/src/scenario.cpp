#include "bucksim/scenario.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace bucksim {

namespace {

std::string format_position(int line, int column, const std::string& message) {
    if (line <= 0) return message;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
}

}  // namespace

ScenarioError::ScenarioError(int line, int column, const std::string& message)
    : std::runtime_error(format_position(line, column, message)), line_(line), column_(column) {}

Scenario default_scenario() { return Scenario{}; }

// =============================================================================
// Key table
// =============================================================================
// One entry per scenario key: section, key name (carrying the file unit
// suffix), value kind, and how to reach the field. Numeric values are stored
// in SI; `scale` converts file units -> SI.

namespace {

enum class KeyKind { Number, NumberOrInf, Bool, EnumControl, EnumTarget, EnumGate };

struct KeyEntry {
    const char* section;
    const char* key;
    KeyKind kind;
    double scale;
    double* (*num)(Scenario&);
    bool* (*flag)(Scenario&);
};

#define NUM_KEY(sec, name, sc, path)                                   \
    KeyEntry { sec, name, KeyKind::Number, sc,                         \
               [](Scenario& s) -> double* { return &s.path; }, nullptr }
#define INF_KEY(sec, name, sc, path)                                   \
    KeyEntry { sec, name, KeyKind::NumberOrInf, sc,                    \
               [](Scenario& s) -> double* { return &s.path; }, nullptr }
#define BOOL_KEY(sec, name, path)                                      \
    KeyEntry { sec, name, KeyKind::Bool, 1.0, nullptr,                 \
               [](Scenario& s) -> bool* { return &s.path; } }

const std::array<KeyEntry, 32> kKeyTable = {{
    NUM_KEY("sim", "t_end_us", 1e-6, sim.t_end),
    NUM_KEY("sim", "dt_ns", 1e-9, sim.dt),
    NUM_KEY("sim", "record_start_us", 1e-6, sim.record_start),

    NUM_KEY("converter", "vsup_v", 1.0, converter.vsup),
    NUM_KEY("converter", "l_uh", 1e-6, converter.l),
    NUM_KEY("converter", "esr_l_ohm", 1.0, converter.esr_l),
    NUM_KEY("converter", "c_out_nf", 1e-9, converter.c_out),
    NUM_KEY("converter", "esr_c_ohm", 1.0, converter.esr_c),
    NUM_KEY("converter", "r_load_ohm", 1.0, converter.r_load),
    NUM_KEY("converter", "i_load_ma", 1e-3, converter.i_load),
    NUM_KEY("converter", "ron_p_ohm", 1.0, converter.ron_p),
    NUM_KEY("converter", "ron_n_ohm", 1.0, converter.ron_n),
    NUM_KEY("converter", "roff_mohm", 1e6, converter.roff),
    NUM_KEY("converter", "c_sw_pf", 1e-12, converter.c_sw),

    NUM_KEY("pwm", "f_khz", 1e3, pwm.freq),
    NUM_KEY("pwm", "duty", 1.0, pwm.duty),
    NUM_KEY("pwm", "deadtime_ns", 1e-9, pwm.deadtime),
    NUM_KEY("pwm", "driver_delay_ns", 1e-9, pwm.driver_delay),
    KeyEntry{"pwm", "control", KeyKind::EnumControl, 1.0, nullptr, nullptr},
    NUM_KEY("pwm", "vref_v", 1.0, pwm.vref),
    NUM_KEY("pwm", "kp", 1.0, pwm.kp),
    NUM_KEY("pwm", "ki", 1.0, pwm.ki),

    KeyEntry{"trojan", "target", KeyKind::EnumTarget, 1.0, nullptr, nullptr},
    KeyEntry{"trojan", "gate", KeyKind::EnumGate, 1.0, nullptr, nullptr},
    NUM_KEY("trojan", "t_trigger_us", 1e-6, trojan.t_trigger),
    INF_KEY("trojan", "t_release_us", 1e-6, trojan.t_release),
    BOOL_KEY("trojan", "suppress_complement", trojan.suppress_complement),
    BOOL_KEY("trojan", "trojan_downstream_of_cap", trojan.downstream_of_cap),

    NUM_KEY("mitigation", "parity_cap_pf", 1e-12, mitigation.c_par),
    NUM_KEY("mitigation", "r_drv_kohm", 1e3, mitigation.r_drv),
    NUM_KEY("mitigation", "c_gate_pf", 1e-12, mitigation.c_gate),
    NUM_KEY("mitigation", "slew_ns", 1e-9, mitigation.t_slew),
}};

#undef NUM_KEY
#undef INF_KEY
#undef BOOL_KEY

const KeyEntry* find_key(std::string_view section, std::string_view key) {
    for (const auto& e : kKeyTable) {
        if (section == e.section && key == e.key) return &e;
    }
    return nullptr;
}

bool known_section(std::string_view name) {
    static constexpr std::array<const char*, 5> sections = {"sim", "converter", "pwm", "trojan",
                                                            "mitigation"};
    return std::any_of(sections.begin(), sections.end(),
                       [&](const char* s) { return name == s; });
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view text, bool allow_inf, int line, int col) {
    std::string_view t = trim(text);
    if (allow_inf && t == "inf") return std::numeric_limits<double>::infinity();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ScenarioError(line, col, "expected a number, got '" + std::string(t) + "'");
    }
    if (!std::isfinite(value)) {
        throw ScenarioError(line, col, "non-finite value '" + std::string(t) + "'");
    }
    return value;
}

bool parse_bool(std::string_view text, int line, int col) {
    std::string_view t = trim(text);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ScenarioError(line, col, "expected true or false, got '" + std::string(t) + "'");
}

void apply_enum(Scenario& s, const KeyEntry& e, std::string_view value, int line, int col) {
    std::string_view v = trim(value);
    switch (e.kind) {
        case KeyKind::EnumControl:
            if (v == "open_loop") s.pwm.control = ControlMode::OpenLoop;
            else if (v == "pi") s.pwm.control = ControlMode::PerCyclePi;
            else throw ScenarioError(line, col, "control must be open_loop or pi");
            return;
        case KeyKind::EnumTarget:
            if (v == "none") s.trojan.target = TrojanTarget::None;
            else if (v == "pmos") s.trojan.target = TrojanTarget::Pmos;
            else if (v == "nmos") s.trojan.target = TrojanTarget::Nmos;
            else throw ScenarioError(line, col, "target must be none, pmos or nmos");
            return;
        case KeyKind::EnumGate:
            if (v == "or") s.trojan.gate = TrojanGate::Or;
            else if (v == "nor") s.trojan.gate = TrojanGate::Nor;
            else throw ScenarioError(line, col, "gate must be or or nor");
            return;
        default:
            throw ScenarioError(line, col, "internal: not an enum key");
    }
}

std::string format_double(double v) {
    char buf[40];
    int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf, static_cast<size_t>(n));
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
    Scenario s = default_scenario();
    std::string section;  // "" until the first [section] header
    std::vector<std::string> seen;

    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::string_view body = trim(line);
        if (body.empty()) continue;

        int col = static_cast<int>(line.find_first_not_of(" \t")) + 1;

        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ScenarioError(line_no, col, "section header missing ']'");
            }
            std::string_view name = trim(body.substr(1, body.size() - 2));
            if (!known_section(name)) {
                throw ScenarioError(line_no, col, "unknown section [" + std::string(name) + "]");
            }
            section = std::string(name);
            continue;
        }

        size_t eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ScenarioError(line_no, col, "expected 'key = value'");
        }
        std::string_view key = trim(body.substr(0, eq));
        std::string_view value = trim(body.substr(eq + 1));
        if (key.empty()) throw ScenarioError(line_no, col, "missing key before '='");
        int vcol = col + static_cast<int>(eq) + 1;

        if (section.empty()) {
            if (key == "label") {
                s.label = std::string(value);
                continue;
            }
            throw ScenarioError(line_no, col,
                                "key '" + std::string(key) + "' outside any section (only 'label' "
                                "is allowed at top level)");
        }
        if (key == "label") {
            throw ScenarioError(line_no, col, "'label' belongs at top level, not in a section");
        }

        const KeyEntry* entry = find_key(section, key);
        if (entry == nullptr) {
            throw ScenarioError(line_no, col,
                                "unknown key '" + std::string(key) + "' in [" + section + "]");
        }
        std::string full = section + "." + std::string(key);
        if (std::find(seen.begin(), seen.end(), full) != seen.end()) {
            throw ScenarioError(line_no, col, "duplicate key '" + full + "'");
        }
        seen.push_back(full);

        switch (entry->kind) {
            case KeyKind::Number:
            case KeyKind::NumberOrInf:
                *entry->num(s) =
                    parse_number(value, entry->kind == KeyKind::NumberOrInf, line_no, vcol) *
                    entry->scale;
                break;
            case KeyKind::Bool:
                *entry->flag(s) = parse_bool(value, line_no, vcol);
                break;
            default:
                apply_enum(s, *entry, value, line_no, vcol);
                break;
        }
    }

    auto violations = validate_scenario(s);
    if (!violations.empty()) {
        throw ScenarioError(0, 0, "invariant violation: " + violations.front());
    }
    return s;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
    std::vector<std::string> out;
    auto fail = [&out](const std::string& msg) { out.push_back(msg); };

    const auto& cv = s.converter;
    if (!(cv.vsup > 0)) fail("vsup must be positive");
    if (!(cv.l > 0)) fail("l must be positive");
    if (!(cv.esr_l > 0)) fail("esr_l must be positive");
    if (!(cv.c_out > 0)) fail("c_out must be positive");
    if (!(cv.esr_c > 0)) fail("esr_c must be positive");
    if (!(cv.r_load > 0)) fail("r_load must be positive");
    if (!(cv.i_load >= 0)) fail("i_load must be non-negative");
    if (!(cv.ron_p > 0)) fail("ron_p must be positive");
    if (!(cv.ron_n > 0)) fail("ron_n must be positive");
    if (!(cv.roff > 0)) fail("roff must be positive");
    if (!(cv.c_sw >= 0)) fail("c_sw must be non-negative");
    if (cv.ron_p > 0 && cv.ron_n > 0 && cv.roff < 1000.0 * std::max(cv.ron_p, cv.ron_n)) {
        fail("roff/ron ratio below 1000");
    }

    const auto& pw = s.pwm;
    if (!(pw.freq > 0)) fail("freq must be positive");
    if (!(pw.duty >= 0.0 && pw.duty <= 1.0)) fail("duty ∈ [0,1]");
    if (!(pw.deadtime >= 0)) fail("deadtime must be non-negative");
    if (pw.freq > 0 && !(pw.deadtime < 0.25 / pw.freq)) {
        fail("deadtime exceeds quarter period");
    }
    if (!(pw.driver_delay >= 0)) fail("driver_delay must be non-negative");
    if (pw.control == ControlMode::PerCyclePi && !(pw.vref > 0)) {
        fail("vref must be positive under pi control");
    }

    const auto& tj = s.trojan;
    if (tj.target != TrojanTarget::None && !(tj.t_release > tj.t_trigger)) {
        fail("t_release must come after t_trigger");
    }
    if (!(tj.t_trigger >= 0)) fail("t_trigger must be non-negative");

    const auto& mt = s.mitigation;
    if (!(mt.c_par >= 0)) fail("parity_cap must be non-negative");
    if (mt.c_par > 0) {
        if (!(mt.r_drv > 0)) fail("r_drv must be positive when the parity capacitor is present");
        if (!(mt.c_gate > 0)) fail("c_gate must be positive when the parity capacitor is present");
        if (!(mt.t_slew > 0)) fail("slew must be positive when the parity capacitor is present");
    }

    const auto& sm = s.sim;
    if (!(sm.dt > 0)) fail("dt must be positive");
    if (!(sm.t_end > 0)) fail("t_end must be positive");
    if (pw.freq > 0 && sm.dt > (1.0 / pw.freq) / 200.0) {
        fail("dt gives fewer than 200 steps per switching period");
    }
    if (!(sm.record_start >= 0 && sm.record_start < sm.t_end)) {
        fail("record_start must lie before t_end");
    }
    if (pw.freq > 0 && (sm.t_end - sm.record_start) < 20.0 / pw.freq) {
        fail("measurement window shorter than 20 switching periods");
    }

    // Edge-fit cross-check; degenerate duties have no edges to fit.
    if (pw.freq > 0 && pw.duty > 0.0 && pw.duty < 1.0) {
        double period = 1.0 / pw.freq;
        double guard = pw.deadtime + 2.0 * pw.driver_delay;
        if (!(guard < pw.duty * period) || !(guard < (1.0 - pw.duty) * period)) {
            fail("deadtime plus driver delays does not fit inside both phases");
        }
    }

    return out;
}

std::string render_scenario(const Scenario& s_in) {
    Scenario s = s_in;  // non-const for accessor reuse
    std::ostringstream os;
    if (!s.label.empty()) os << "label = " << s.label << "\n\n";

    const char* current = "";
    for (const auto& e : kKeyTable) {
        if (std::string_view(current) != e.section) {
            if (*current != '\0') os << "\n";
            os << "[" << e.section << "]\n";
            current = e.section;
        }
        os << e.key << " = ";
        switch (e.kind) {
            case KeyKind::Number:
                os << format_double(*e.num(s) / e.scale);
                break;
            case KeyKind::NumberOrInf: {
                double v = *e.num(s);
                os << (std::isinf(v) ? "inf" : format_double(v / e.scale));
                break;
            }
            case KeyKind::Bool:
                os << (*e.flag(s) ? "true" : "false");
                break;
            case KeyKind::EnumControl:
                os << (s.pwm.control == ControlMode::OpenLoop ? "open_loop" : "pi");
                break;
            case KeyKind::EnumTarget:
                os << (s.trojan.target == TrojanTarget::None
                           ? "none"
                           : (s.trojan.target == TrojanTarget::Pmos ? "pmos" : "nmos"));
                break;
            case KeyKind::EnumGate:
                os << (s.trojan.gate == TrojanGate::Or ? "or" : "nor");
                break;
        }
        os << "\n";
    }
    return os.str();
}

bool is_numeric_key(std::string_view dotted) {
    size_t dot = dotted.find('.');
    if (dot == std::string_view::npos) return false;
    const KeyEntry* e = find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
    return e != nullptr && (e->kind == KeyKind::Number || e->kind == KeyKind::NumberOrInf);
}

void set_numeric_key(Scenario& s, std::string_view dotted, double value) {
    size_t dot = dotted.find('.');
    const KeyEntry* e = dot == std::string_view::npos
                            ? nullptr
                            : find_key(dotted.substr(0, dot), dotted.substr(dot + 1));
    if (e == nullptr || (e->kind != KeyKind::Number && e->kind != KeyKind::NumberOrInf)) {
        throw ScenarioError(0, 0, "'" + std::string(dotted) + "' is not a numeric scenario key");
    }
    *e->num(s) = value * e->scale;
}

}  // namespace bucksim
