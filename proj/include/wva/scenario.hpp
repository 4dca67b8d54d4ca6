#pragma once

// Batch scenarios: real and imaginary weak-value runs, cartesian parameter
// sweeps and the numerical self-check catalog. Degrees at the boundary,
// radians inside.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wva/measurement.hpp"
#include "wva/sagnac.hpp"
#include "wva/weak_value.hpp"

namespace wva {

enum class RunMode { real_wv, imag_wv, sweep, validate };

std::string_view to_string(RunMode mode);

struct SweepAxes {
  // Empty axis: take the value from the base configuration.
  std::vector<double> gamma_half_deg;
  std::vector<double> theta_half_deg;
  std::vector<double> eta_phi_deg;
  std::vector<double> delta_phi_deg;
};

struct ExperimentConfig {
  RunMode mode = RunMode::real_wv;
  std::size_t grid = 4096;
  double eta_phi_deg = 13.7;
  double delta_phi_deg = 1.2;
  std::vector<double> gamma_half_deg{45, 20, 10, 5, 3};
  double theta_half_deg = 0;
  double extinction_ratio = 0;

  int ell_min = -15;
  int ell_max = 15;
  int windows = 30;
  double window_seconds = 0.2;
  double mean_flux = 0;
  std::optional<std::uint64_t> seed;
  WeightMode weights = WeightMode::ensemble_std;

  /// Relative disagreement between simulation and exact prediction above
  /// which a point is flagged.
  double tolerance = 0.05;

  SweepAxes sweep;

  bool stochastic() const;
  void validate() const;
  OAMScanConfig scan_config(std::uint64_t rng_seed) const;
};

ExperimentConfig default_config(RunMode mode);

/// One parameter point, radians.
struct PointParams {
  double gamma = 0;
  double theta = 0;
  double eta_phi = 0;
  double delta_phi = 0;
};

struct PointResult {
  PointParams params;
  WeakValue<double> wv_exact;
  WeakValue<double> wv_approx;
  ShiftPrediction<double> pred_exact;
  ShiftPrediction<double> pred_approx;
  double probability = 0;

  double d_phi_sim = 0;       // centroid of the coherent pointer
  double d_phi_measured = 0;  // centroid including polarizer leakage
  double d_ell_sim = 0;
  double d_ell_measured = 0;
  double amplification = 0;   // d_phi_measured / delta_phi

  double disagreement_phi = 0;  // relative to the exact prediction
  double disagreement_ell = 0;
  RegimeAssessment regime{};

  std::optional<std::uint64_t> seed;
  std::optional<OAMScanResult> scan;
  std::optional<GaussianFit> fit;

  RealVector<double> profile;  // measured angular intensity, normalized pointer units

  bool flagged(double tolerance) const;
};

/// Exact evolution, post-selection and (with a seed) a scan plus fit.
PointResult analyze_point(const ExperimentConfig& cfg, const PointParams& params,
                          std::optional<std::uint64_t> seed);

struct ReportEntry {
  std::string scenario;
  int point;  // -1 for run-level quantities
  std::string quantity;
  double value;
  double sigma;
  std::string source;  // analytic-exact, analytic-approx, simulated, fitted
};

struct Table {
  std::string name;  // file name
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct ValidationCheck {
  std::string name;
  double measured;
  double limit;
  std::string comparison;  // "<=", ">=", "in[a,b]"
  bool passed;
  bool regime_violation = false;
};

struct RunReport {
  ExperimentConfig config;
  std::string version;
  std::vector<PointResult> points;
  std::vector<ReportEntry> entries;
  std::vector<Table> tables;
  std::vector<ValidationCheck> checks;
  std::vector<std::string> flags;
  bool regime_violation = false;
  bool failed = false;

  /// 0 success, 3 physics-regime violation, 4 numerical failure.
  int exit_code() const;
};

const char* version();

std::vector<PointParams> expand_points(const ExperimentConfig& cfg);

RunReport run_real_wv(const ExperimentConfig& cfg);
RunReport run_imag_wv(const ExperimentConfig& cfg);
RunReport run_validate(const ExperimentConfig& cfg);

struct SweepResult {
  std::vector<RunReport> points;
  RunReport aggregate;
};

/// Cartesian sweep; point i uses seed + i. Points run concurrently and are
/// collected in order.
SweepResult run_sweep(const ExperimentConfig& cfg);

/// Slope through the origin of y against x, optionally weighted.
struct SlopeFit {
  double slope;
  double sigma;
};
SlopeFit slope_through_origin(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& y_sigma = {});

}  // namespace wva
