#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bucksim/io.hpp"
#include "bucksim/metrics.hpp"
#include "bucksim/scenario.hpp"
#include "bucksim/sim.hpp"

namespace fs = std::filesystem;

namespace {

int load_scenario(const std::string& path, bucksim::Scenario& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        std::cerr << "error: cannot read " << path << "\n";
        return 2;
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        out = bucksim::parse_scenario(ss.str());
    } catch (const bucksim::ScenarioError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return 2;
    }
    if (out.label.empty()) out.label = fs::path(path).stem().string();
    return 0;
}

bool parse_values(const std::string& csv, std::vector<double>& out) {
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        std::size_t comma = csv.find(',', pos);
        if (comma == std::string::npos) comma = csv.size();
        std::size_t a = pos;
        std::size_t b = comma;
        while (a < b && std::isspace(static_cast<unsigned char>(csv[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(csv[b - 1]))) --b;
        if (a == b) return false;
        double v = 0.0;
        const auto res = std::from_chars(csv.data() + a, csv.data() + b, v);
        if (res.ec != std::errc{} || res.ptr != csv.data() + b || !std::isfinite(v)) {
            return false;
        }
        out.push_back(v);
        pos = comma + 1;
        if (comma == csv.size()) break;
    }
    return !out.empty();
}

int do_run(const std::string& path, const std::string& out_dir, bool quiet) {
    bucksim::Scenario s;
    if (int rc = load_scenario(path, s)) return rc;

    bucksim::SimResult r;
    try {
        r = bucksim::simulate(s);
    } catch (const bucksim::SimDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }

    const bucksim::SteadyStateMetrics m = bucksim::measure(r.traces, s);
    try {
        fs::create_directories(out_dir);
        bucksim::write_traces_csv(fs::path(out_dir) / (s.label + ".csv"), r.traces);
        const auto j = bucksim::make_summary(s, m);
        bucksim::write_summary(fs::path(out_dir) / (s.label + ".summary.json"), j);
        if (!quiet) std::cout << j.dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int do_sweep(const std::string& path, const std::string& out_dir,
             const std::string& param, const std::string& values_csv,
             bool quiet) {
    bucksim::Scenario base;
    if (int rc = load_scenario(path, base)) return rc;

    if (!bucksim::is_numeric_key(param)) {
        std::cerr << "error: --param '" << param
                  << "' does not name a numeric scenario key\n";
        return 2;
    }
    std::vector<double> values;
    if (!parse_values(values_csv, values)) {
        std::cerr << "error: --values must be a comma separated list of numbers\n";
        return 2;
    }

    std::vector<bucksim::Scenario> runs;
    runs.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        bucksim::Scenario si = base;
        try {
            bucksim::set_numeric_key(si, param, values[i]);
        } catch (const bucksim::ScenarioError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
        const auto violations = bucksim::validate_scenario(si);
        if (!violations.empty()) {
            std::cerr << "error: " << param << " = " << values[i] << ": "
                      << violations.front() << "\n";
            return 2;
        }
        si.label = base.label + "__" + std::to_string(i);
        runs.push_back(std::move(si));
    }

    unsigned conc = std::thread::hardware_concurrency();
    if (conc == 0) conc = 2;
    conc = std::min<unsigned>({conc, 4u, static_cast<unsigned>(runs.size())});

    // A failed run is a recorded row, not a sweep failure; `errors` carries
    // the divergence message for failed slots.
    std::vector<bucksim::SimResult> results(runs.size());
    std::vector<std::string> errors(runs.size());
    for (std::size_t start = 0; start < runs.size(); start += conc) {
        const std::size_t stop = std::min(runs.size(), start + conc);
        std::vector<std::future<bucksim::SimResult>> batch;
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(std::async(std::launch::async,
                                       [&runs, i] { return bucksim::simulate(runs[i]); }));
        }
        for (std::size_t i = start; i < stop; ++i) {
            try {
                results[i] = batch[i - start].get();
            } catch (const bucksim::SimDivergence& e) {
                errors[i] = e.what();
            }
        }
    }

    try {
        fs::create_directories(out_dir);
        std::ofstream sweep_csv(fs::path(out_dir) / "sweep.csv", std::ios::binary);
        if (!sweep_csv) {
            std::cerr << "error: cannot open " << out_dir << "/sweep.csv\n";
            return 1;
        }
        sweep_csv << "value,label,v_avg_v,ripple_mvpp,efficiency_pct,i_l_avg_ma,"
                     "v_sw_min_v,v_sw_max_v,duty_effective,outcome\n";
        const char* nan_fields = "nan,nan,nan,nan,nan,nan,nan";
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (!errors[i].empty()) {
                sweep_csv << bucksim::format_g9(values[i]) << ',' << runs[i].label
                          << ',' << nan_fields << ",diverged\n";
                if (!quiet) {
                    std::cout << param << " = " << bucksim::format_g9(values[i])
                              << "  ->  diverged  (" << errors[i] << ")\n";
                }
                continue;
            }
            const auto m = bucksim::measure(results[i].traces, runs[i]);
            bucksim::write_summary(
                fs::path(out_dir) / (runs[i].label + ".summary.json"),
                bucksim::make_summary(runs[i], m));
            sweep_csv << bucksim::format_g9(values[i]) << ',' << runs[i].label << ','
                      << bucksim::format_g9(m.v_avg) << ','
                      << bucksim::format_g9(m.ripple_pp * 1e3) << ','
                      << bucksim::format_g9(m.efficiency * 100.0) << ','
                      << bucksim::format_g9(m.i_l_avg * 1e3) << ','
                      << bucksim::format_g9(m.v_sw_min) << ','
                      << bucksim::format_g9(m.v_sw_max) << ','
                      << bucksim::format_g9(m.duty_effective) << ','
                      << bucksim::outcome_name(m.outcome) << '\n';
            if (!quiet) {
                std::cout << param << " = " << bucksim::format_g9(values[i])
                          << "  ->  " << bucksim::outcome_name(m.outcome)
                          << "  (v_avg " << bucksim::format_g9(m.v_avg) << " V)\n";
            }
        }
        if (!sweep_csv) {
            std::cerr << "error: short write to sweep.csv\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// Analytic-oracle suite: energy-account closure, first-order ripple estimate
// vs measurement, and duty_for_target inverted through the achieved v_avg.
// The latter two only apply to open-loop trojan-free runs.
int do_check(const std::string& path, bool quiet) {
    bucksim::Scenario s;
    if (int rc = load_scenario(path, s)) return rc;

    bucksim::SimResult r;
    try {
        r = bucksim::simulate(s);
    } catch (const bucksim::SimDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    const bucksim::SteadyStateMetrics m = bucksim::measure(r.traces, s);

    bool all_ok = true;
    std::ostringstream report;
    const auto line = [&](bool ok, const char* name, const std::string& detail) {
        all_ok = all_ok && ok;
        report << (ok ? "PASS" : "FAIL") << "  " << name << "  " << detail << "\n";
    };

    {
        const bucksim::EnergyAccount& en = r.energy;
        const double through = std::max(en.e_in, en.e_load + en.e_dissipated);
        const double imb = std::fabs(en.imbalance());
        std::ostringstream d;
        d << "imbalance " << bucksim::format_g9(imb) << " J of "
          << bucksim::format_g9(through) << " J throughput ("
          << bucksim::format_g9(through > 0.0 ? 100.0 * imb / through : 0.0)
          << " %, limit 1 %)";
        line(imb <= 0.01 * through + 1e-15, "energy balance", d.str());
    }

    const bool oracles_apply = s.trojan.target == bucksim::TrojanTarget::None &&
                               s.pwm.control == bucksim::ControlMode::OpenLoop;
    if (oracles_apply) {
        // First-order estimate at the operating point the run actually reached.
        const auto est = bucksim::ripple_analytic(s.converter, s.pwm.freq,
                                                  s.pwm.duty, m.v_avg);
        const double rel = est.total > 0.0
                               ? (m.ripple_pp - est.total) / est.total
                               : 0.0;
        std::ostringstream d;
        d << "measured " << bucksim::format_g9(m.ripple_pp * 1e3)
          << " mVpp vs analytic " << bucksim::format_g9(est.total * 1e3)
          << " mVpp (delta " << bucksim::format_g9(rel * 100.0)
          << " %, limit 15 %)";
        line(std::fabs(rel) <= 0.15, "ripple oracle ", d.str());

        try {
            const double d_star = bucksim::duty_for_target(s.converter, m.v_avg);
            const double delta = d_star - s.pwm.duty;
            std::ostringstream dd;
            dd << "commanded " << bucksim::format_g9(s.pwm.duty)
               << " vs duty_for_target(v_avg) " << bucksim::format_g9(d_star)
               << " (delta " << bucksim::format_g9(delta * 100.0)
               << " pp, limit 2 pp)";
            line(std::fabs(delta) <= 0.02, "duty oracle   ", dd.str());
        } catch (const std::domain_error& e) {
            line(false, "duty oracle   ", e.what());
        }
    } else {
        report << "SKIP  ripple oracle   not applicable (trojan or closed loop)\n"
               << "SKIP  duty oracle     not applicable (trojan or closed loop)\n";
    }

    if (!quiet) {
        std::cout << "scenario " << s.label << "\n" << report.str()
                  << (all_ok ? "all checks passed" : "check failure") << "\n";
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient simulator for a synchronous buck converter with a "
                 "gate-level PWM-lock trojan and a parity-capacitor mitigation"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::string param;
    std::string values_csv;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "Simulate one scenario; write traces and a summary");
    run->add_option("scenario", scenario_path, "Scenario file")->required();
    run->add_option("--out", out_dir, "Output directory (default ./out)");
    run->add_flag("--quiet", quiet, "Suppress the console summary");

    CLI::App* sweep = app.add_subcommand("sweep", "Repeat a scenario over values of one numeric key");
    sweep->add_option("scenario", scenario_path, "Scenario file")->required();
    sweep->add_option("--param", param, "Dotted key, e.g. mitigation.parity_cap_pf")->required();
    sweep->add_option("--values", values_csv, "Comma separated values in file units")->required();
    sweep->add_option("--out", out_dir, "Output directory (default ./out)");
    sweep->add_flag("--quiet", quiet, "Suppress per-value console lines");

    CLI::App* check = app.add_subcommand(
        "check", "Run a scenario through the analytic-oracle suite");
    check->add_option("scenario", scenario_path, "Scenario file")->required();
    check->add_flag("--quiet", quiet, "Suppress the report; exit code only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) return do_run(scenario_path, out_dir, quiet);
    if (sweep->parsed()) return do_sweep(scenario_path, out_dir, param, values_csv, quiet);
    if (check->parsed()) return do_check(scenario_path, quiet);
    return 2;
}
