#include "bucksim/io.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "bucksim/parity.hpp"
#include "bucksim/trojan.hpp"

namespace bucksim {

std::string format_g9(double v) {
    char buf[48];
    const auto res =
        std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return std::string(buf, res.ptr);
}

void write_traces_csv(std::ostream& os, const TraceSet& tr) {
    os << "t_s,v_out,v_sw,i_l,v_c,v_gate_p,v_gate_n,trig,i_supply\n";
    std::string line;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        line.clear();
        line += format_g9(tr.t0 + static_cast<double>(k) * tr.dt);
        line += ',';
        line += format_g9(tr.v_out[k]);
        line += ',';
        line += format_g9(tr.v_sw[k]);
        line += ',';
        line += format_g9(tr.i_l[k]);
        line += ',';
        line += format_g9(tr.v_c[k]);
        line += ',';
        line += format_g9(tr.v_gate_p[k]);
        line += ',';
        line += format_g9(tr.v_gate_n[k]);
        line += ',';
        line += tr.trig[k] ? '1' : '0';
        line += ',';
        line += format_g9(tr.i_supply[k]);
        line += '\n';
        os << line;
    }
}

void write_traces_csv(const std::filesystem::path& path, const TraceSet& tr) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_traces_csv(os, tr);
    if (!os) throw std::runtime_error("short write to " + path.string());
}

nlohmann::ordered_json make_summary(const Scenario& s, const SteadyStateMetrics& m) {
    nlohmann::ordered_json j;
    j["label"] = s.label;
    j["v_avg_v"] = m.v_avg;
    j["ripple_mvpp"] = m.ripple_pp * 1e3;
    j["efficiency_pct"] = m.efficiency * 100.0;
    j["i_l_avg_ma"] = m.i_l_avg * 1e3;
    j["v_sw_min_v"] = m.v_sw_min;
    j["v_sw_max_v"] = m.v_sw_max;
    j["duty_effective"] = m.duty_effective;
    j["outcome"] = std::string(outcome_name(m.outcome));
    j["explanation"] = m.explanation;
    if (s.trojan.target != TrojanTarget::None) {
        j["trigger_gate_count"] = kTriggerGateCount;
        j["trigger_transistor_count"] = kTriggerTransistorCount;
    }
    if (s.mitigation.c_par > 0.0) {
        j["phase_shift_est_ns"] = phase_shift_estimate(s.mitigation) * 1e9;
    }
    return j;
}

void write_summary(const std::filesystem::path& path,
                   const nlohmann::ordered_json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("short write to " + path.string());
}

}  // namespace bucksim
