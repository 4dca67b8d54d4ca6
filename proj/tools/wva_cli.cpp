// wva: batch runner for the weak-value angular-rotation simulations.
//
//   wva real-wv  [options]   angular centroid shifts from Re(sigma_w)
//   wva imag-wv  [options]   OAM centroid shifts from Im(sigma_w), with scans and fits
//   wva sweep    [options]   cartesian parameter sweep
//   wva validate [options]   numerical self-check catalog
//
// Exit codes: 0 success, 2 configuration error, 3 physics-regime violation,
// 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wva/report_io.hpp"
#include "wva/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 4;

struct Flags {
  std::size_t grid = 0;
  double eta_phi = 0;
  double delta_phi = 0;
  std::vector<double> gamma_half;
  double theta_half = 0;
  double extinction_ratio = 0;
  int ell_min = 0;
  int ell_max = 0;
  int windows = 0;
  double window_seconds = 0;
  double mean_flux = 0;
  std::uint64_t seed = 0;
  std::string weights;
  double tolerance = 0;
  std::string out_dir = "wva_out";
  wva::SweepAxes axes;
};

template <typename T, typename U>
void override_if(const CLI::App& app, const char* name, T& target, const U& value) {
  if (app.get_option(name)->count() > 0) target = value;
}

void print_summary(const wva::RunReport& report, const std::string& out_dir) {
  fmt::print("mode = {}\n", wva::to_string(report.config.mode));
  fmt::print("version = {}\n", report.version);
  if (report.config.seed) fmt::print("seed = {}\n", *report.config.seed);
  fmt::print("points = {}\n", report.points.size());
  for (const auto& c : report.checks) {
    fmt::print("check {} = {} (limit {} {}) {}\n", c.name, wva::format_number(c.measured),
               c.comparison, wva::format_number(c.limit),
               c.passed ? "pass" : (c.regime_violation ? "regime" : "FAIL"));
  }
  for (const auto& f : report.flags) fmt::print("flag: {}\n", f);
  fmt::print("out_dir = {}\n", out_dir);
  fmt::print("exit = {}\n", report.exit_code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak-value amplification of small angular rotations"};
  app.set_version_flag("--version", std::string(wva::version()));
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI config file (flags given on the command line win)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Flags f;
  app.add_option("--grid", f.grid, "azimuthal grid points (power of two >= 64)");
  app.add_option("--eta-phi", f.eta_phi, "angular mode width eta_phi (deg)");
  app.add_option("--delta-phi", f.delta_phi, "Dove-prism rotation between the arms (deg)");
  app.add_option("--gamma-half", f.gamma_half, "post-selection angle(s) gamma/2 (deg)");
  app.add_option("--theta-half", f.theta_half, "geometric phase theta/2 (deg)");
  app.add_option("--extinction-ratio", f.extinction_ratio, "polarizer extinction ratio");
  app.add_option("--ell-min", f.ell_min, "lowest scanned OAM index");
  app.add_option("--ell-max", f.ell_max, "highest scanned OAM index");
  app.add_option("--windows", f.windows, "counting windows per OAM index");
  app.add_option("--window-seconds", f.window_seconds, "window length (s)");
  app.add_option("--mean-flux", f.mean_flux, "detected photons per second at unit efficiency");
  app.add_option("--seed", f.seed, "base RNG seed (required for stochastic modes)");
  app.add_option("--weights", f.weights, "fit weights: std or std-of-mean")
      ->check(CLI::IsMember({"std", "std-of-mean"}));
  app.add_option("--tolerance", f.tolerance, "relative gap that flags a point");
  app.add_option("--out-dir", f.out_dir, "output directory");

  const std::vector<std::pair<wva::RunMode, CLI::App*>> modes{
      {wva::RunMode::real_wv, app.add_subcommand("real-wv", "Re(sigma_w): angular centroid shifts")},
      {wva::RunMode::imag_wv, app.add_subcommand("imag-wv", "Im(sigma_w): OAM scans and fits")},
      {wva::RunMode::sweep, app.add_subcommand("sweep", "cartesian parameter sweep")},
      {wva::RunMode::validate, app.add_subcommand("validate", "numerical self-check catalog")},
  };
  CLI::App* sweep = modes[2].second;
  sweep->add_option("--sweep-gamma-half", f.axes.gamma_half_deg, "gamma/2 axis (deg)");
  sweep->add_option("--sweep-theta-half", f.axes.theta_half_deg, "theta/2 axis (deg)");
  sweep->add_option("--sweep-eta-phi", f.axes.eta_phi_deg, "eta_phi axis (deg)");
  sweep->add_option("--sweep-delta-phi", f.axes.delta_phi_deg, "delta_phi axis (deg)");
  for (const auto& m : modes) m.second->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  wva::RunMode mode = wva::RunMode::real_wv;
  for (const auto& m : modes) {
    if (m.second->parsed()) mode = m.first;
  }

  try {
    wva::ExperimentConfig cfg = wva::default_config(mode);
    override_if(app, "--grid", cfg.grid, f.grid);
    override_if(app, "--eta-phi", cfg.eta_phi_deg, f.eta_phi);
    override_if(app, "--delta-phi", cfg.delta_phi_deg, f.delta_phi);
    override_if(app, "--gamma-half", cfg.gamma_half_deg, f.gamma_half);
    override_if(app, "--theta-half", cfg.theta_half_deg, f.theta_half);
    override_if(app, "--extinction-ratio", cfg.extinction_ratio, f.extinction_ratio);
    override_if(app, "--ell-min", cfg.ell_min, f.ell_min);
    override_if(app, "--ell-max", cfg.ell_max, f.ell_max);
    override_if(app, "--windows", cfg.windows, f.windows);
    override_if(app, "--window-seconds", cfg.window_seconds, f.window_seconds);
    override_if(app, "--mean-flux", cfg.mean_flux, f.mean_flux);
    override_if(app, "--tolerance", cfg.tolerance, f.tolerance);
    if (app.get_option("--seed")->count() > 0) cfg.seed = f.seed;
    if (app.get_option("--weights")->count() > 0) {
      cfg.weights = f.weights == "std" ? wva::WeightMode::ensemble_std
                                       : wva::WeightMode::std_of_mean;
    }
    if (mode == wva::RunMode::sweep) cfg.sweep = f.axes;

    wva::RunReport report;
    switch (mode) {
      case wva::RunMode::real_wv: report = wva::run_real_wv(cfg); break;
      case wva::RunMode::imag_wv: report = wva::run_imag_wv(cfg); break;
      case wva::RunMode::validate: report = wva::run_validate(cfg); break;
      case wva::RunMode::sweep: report = wva::run_sweep(cfg).aggregate; break;
    }
    wva::write_report(report, f.out_dir);
    print_summary(report, f.out_dir);
    return report.exit_code();
  } catch (const wva::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.category() == wva::ErrorCategory::configuration ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
