#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bucksim/metrics.hpp"
#include "bucksim/scenario.hpp"
#include "bucksim/state.hpp"

namespace bucksim {

/// Locale-independent shortest-ish rendering with 9 significant digits,
/// shared by every CSV writer.
std::string format_g9(double v);

void write_traces_csv(std::ostream& os, const TraceSet& tr);

/// Overwrites `path`; throws std::runtime_error when the file cannot be
/// opened.
void write_traces_csv(const std::filesystem::path& path, const TraceSet& tr);

/// Summary document with the stable reporting keys.  Adds the trigger cell
/// inventory when a trojan is configured and the estimated comparator phase
/// shift when a parity capacitor is fitted.
nlohmann::ordered_json make_summary(const Scenario& s, const SteadyStateMetrics& m);

void write_summary(const std::filesystem::path& path,
                   const nlohmann::ordered_json& j);

}  // namespace bucksim
