#pragma once

// CSV and INI serialization of run reports. Column layouts are documented in
// docs/FORMATS.md and frozen by golden files under tests/golden.

#include <filesystem>
#include <string>

#include "wva/scenario.hpp"

namespace wva {

/// Shortest round-trip-stable rendering used in every CSV ("{:.12g}").
std::string format_number(double value);

std::string to_csv(const Table& table);

/// Long-format table: scenario, point, quantity, value, sigma, source.
Table long_format(const RunReport& report);

/// Effective configuration in the CLI's config-file syntax, preceded by
/// comment lines carrying the code version and run mode. Feeding the file
/// back through --config reproduces the run.
std::string config_to_ini(const ExperimentConfig& cfg, const std::string& version);

/// Writes report.csv, provenance.ini and every table of the report into
/// out_dir (created if missing).
void write_report(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace wva
