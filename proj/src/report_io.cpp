#include "wva/report_io.hpp"

#include <fstream>

#include <fmt/format.h>

namespace wva {

std::string format_number(double value) { return fmt::format("{:.12g}", value); }

std::string to_csv(const Table& table) {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(table.columns);
  for (const auto& row : table.rows) line(row);
  return out;
}

Table long_format(const RunReport& report) {
  Table t{"report.csv", {"scenario", "point", "quantity", "value", "sigma", "source"}, {}};
  for (const auto& e : report.entries) {
    t.rows.push_back({e.scenario, e.point < 0 ? "" : std::to_string(e.point), e.quantity,
                      format_number(e.value), format_number(e.sigma), e.source});
  }
  return t;
}

namespace {

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v[i]);
  }
  return s + "]";
}

}  // namespace

std::string config_to_ini(const ExperimentConfig& cfg, const std::string& version) {
  std::string s;
  s += fmt::format("# wva {}\n# mode {}\n", version, to_string(cfg.mode));
  s += fmt::format("grid = {}\n", cfg.grid);
  s += fmt::format("eta-phi = {}\n", format_number(cfg.eta_phi_deg));
  s += fmt::format("delta-phi = {}\n", format_number(cfg.delta_phi_deg));
  s += fmt::format("gamma-half = {}\n", list(cfg.gamma_half_deg));
  s += fmt::format("theta-half = {}\n", format_number(cfg.theta_half_deg));
  s += fmt::format("extinction-ratio = {}\n", format_number(cfg.extinction_ratio));
  s += fmt::format("ell-min = {}\nell-max = {}\n", cfg.ell_min, cfg.ell_max);
  s += fmt::format("windows = {}\n", cfg.windows);
  s += fmt::format("window-seconds = {}\n", format_number(cfg.window_seconds));
  s += fmt::format("mean-flux = {}\n", format_number(cfg.mean_flux));
  if (cfg.seed) s += fmt::format("seed = {}\n", *cfg.seed);
  s += fmt::format("weights = {}\n",
                   cfg.weights == WeightMode::ensemble_std ? "std" : "std-of-mean");
  s += fmt::format("tolerance = {}\n", format_number(cfg.tolerance));

  const SweepAxes& ax = cfg.sweep;
  if (cfg.mode == RunMode::sweep) {
    s += "\n[sweep]\n";
    if (!ax.gamma_half_deg.empty()) s += fmt::format("sweep-gamma-half = {}\n", list(ax.gamma_half_deg));
    if (!ax.theta_half_deg.empty()) s += fmt::format("sweep-theta-half = {}\n", list(ax.theta_half_deg));
    if (!ax.eta_phi_deg.empty()) s += fmt::format("sweep-eta-phi = {}\n", list(ax.eta_phi_deg));
    if (!ax.delta_phi_deg.empty()) s += fmt::format("sweep-delta-phi = {}\n", list(ax.delta_phi_deg));
  }
  return s;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << contents;
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace

void write_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create " + out_dir.string() + ": " + ec.message());
  write_file(out_dir / "report.csv", to_csv(long_format(report)));
  write_file(out_dir / "provenance.ini", config_to_ini(report.config, report.version));
  for (const auto& t : report.tables) write_file(out_dir / t.name, to_csv(t));
}

}  // namespace wva
