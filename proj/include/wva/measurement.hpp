#pragma once

// Simulated detection: angular intensity imaging, projective OAM scans with
// Poisson photon counting, and weighted least-squares Gaussian fits of the
// scanned spectra.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "wva/sagnac.hpp"

namespace wva {

/// Fiber-coupled efficiency of the projection onto exp(i l phi), small
/// fiber-mode limit: |a_l|^2.
double projective_efficiency(const Wavefunction& psi, int ell);

struct OAMScanConfig {
  int ell_min = -15;
  int ell_max = 15;
  int windows = 30;
  double window_seconds = 0.2;
  double mean_flux = 0;  // detected photons per second at unit efficiency
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct OAMScanResult {
  std::vector<int> ells;
  Eigen::VectorXd expected;  // mean_flux * window_seconds * efficiency
  Eigen::VectorXd mean;      // window average per l
  Eigen::VectorXd stddev;    // ensemble standard deviation (n - 1)
  Eigen::MatrixXd counts;    // rows: l, columns: window
  double covered_mass = 1;   // efficiency summed over the scanned l range
  bool coverage_warning = false;

  int windows() const { return static_cast<int>(counts.cols()); }
};

inline constexpr double kMinCoveredMass = 0.99;

/// Per-(seed, l, window) generator seed. Each count is drawn from its own
/// stream, so results do not depend on evaluation order.
std::uint64_t substream_seed(std::uint64_t seed, int ell, int window);

std::int64_t sample_poisson(double mean, std::mt19937_64& engine);

/// Scans a set of per-l efficiencies (the expected detection probability of
/// each projection).
OAMScanResult scan_efficiencies(const std::vector<int>& ells, const Eigen::VectorXd& efficiency,
                                const OAMScanConfig& cfg);

OAMScanResult scan_oam(const Wavefunction& psi, const OAMScanConfig& cfg);

/// Scan of a post-selected beam including the incoherent polarizer leakage.
OAMScanResult scan_oam(const PostSelection& selected, const OAMScanConfig& cfg);

enum class WeightMode { ensemble_std, std_of_mean };

struct FitOptions {
  WeightMode weights = WeightMode::ensemble_std;
  int max_iterations = 200;
  double gradient_tolerance = 1e-9;
  bool require_convergence = true;
};

struct GaussianFit {
  double center = 0;
  double width = 0;
  double amplitude = 0;
  double center_confidence_3sigma = 0;
  bool converged = false;
  double residual_norm = 0;  // sqrt of the weighted sum of squares
  int iterations = 0;
};

/// Fits A exp(-(l - mu)^2 / (2 s^2)) to the scan means by damped
/// Gauss-Newton, weights 1 / max(var_l, floor), floor = max(1, 1% of peak)^2.
GaussianFit fit_gaussian_wls(const OAMScanResult& result, const FitOptions& options = {});

/// Same fit on explicit data and weights.
GaussianFit fit_gaussian_wls(const Eigen::VectorXd& ells, const Eigen::VectorXd& values,
                             const Eigen::VectorXd& weights, const FitOptions& options = {});

/// |f(phi)|^2, optionally plus an incoherent leakage profile.
RealVector<double> angular_intensity(const Wavefunction& pointer,
                                     const std::optional<RealVector<double>>& leakage = {});

}  // namespace wva
