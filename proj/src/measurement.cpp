#include "wva/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wva {

double projective_efficiency(const Wavefunction& psi, int ell) {
  return oam_transform(psi).power(ell);
}

void OAMScanConfig::validate() const {
  if (ell_min > ell_max) throw ConfigError("ell range is empty");
  if (windows < 2) throw ConfigError("at least two windows are needed for an ensemble std");
  if (!(window_seconds > 0)) throw ConfigError("window_seconds must be positive");
  if (!(mean_flux >= 0) || !std::isfinite(mean_flux)) {
    throw ConfigError("mean_flux must be finite and non-negative");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<int> ell_range(const OAMScanConfig& cfg) {
  std::vector<int> ells;
  for (int ell = cfg.ell_min; ell <= cfg.ell_max; ++ell) ells.push_back(ell);
  return ells;
}

Eigen::VectorXd gather(const RealVector<double>& power, const Spectrum& spec,
                       const std::vector<int>& ells) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(ells.size()));
  for (std::size_t i = 0; i < ells.size(); ++i) {
    if (!spec.contains(ells[i])) {
      throw EllOutOfRange("l = " + std::to_string(ells[i]) + " is not resolved by the grid");
    }
    out(static_cast<Eigen::Index>(i)) = power(ells[i] - spec.ell_min());
  }
  return out;
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, int ell, int window) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(ell)));
  return splitmix64(h ^ static_cast<std::uint64_t>(window));
}

std::int64_t sample_poisson(double mean, std::mt19937_64& engine) {
  if (!(mean > 0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(engine);
}

OAMScanResult scan_efficiencies(const std::vector<int>& ells, const Eigen::VectorXd& efficiency,
                                const OAMScanConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(ells.size());
  if (efficiency.size() != n) throw ConfigError("one efficiency per scanned l is required");

  OAMScanResult out;
  out.ells = ells;
  out.expected = cfg.mean_flux * cfg.window_seconds * efficiency;
  out.counts.resize(n, cfg.windows);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int w = 0; w < cfg.windows; ++w) {
      std::mt19937_64 engine(substream_seed(cfg.rng_seed, ells[static_cast<std::size_t>(i)], w));
      out.counts(i, w) = static_cast<double>(sample_poisson(out.expected(i), engine));
    }
  }
  out.mean = out.counts.rowwise().mean();
  out.stddev.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ss = (out.counts.row(i).array() - out.mean(i)).square().sum();
    out.stddev(i) = std::sqrt(ss / static_cast<double>(cfg.windows - 1));
  }
  out.covered_mass = efficiency.sum();
  return out;
}

OAMScanResult scan_oam(const Wavefunction& psi, const OAMScanConfig& cfg) {
  const Spectrum spec = oam_transform(psi);
  const RealVector<double> power = spec.power();
  const auto ells = ell_range(cfg);
  OAMScanResult out = scan_efficiencies(ells, gather(power, spec, ells), cfg);
  out.covered_mass /= power.sum();
  out.coverage_warning = out.covered_mass < kMinCoveredMass;
  return out;
}

OAMScanResult scan_oam(const PostSelection& selected, const OAMScanConfig& cfg) {
  const Spectrum spec = oam_transform(selected.pointer);
  RealVector<double> power = spec.power();
  if (selected.extinction_ratio > 0) {
    power += selected.extinction_ratio * oam_transform(selected.blocked).power();
  }
  const auto ells = ell_range(cfg);
  // Efficiencies relative to the transmitted (coherent) flux.
  OAMScanResult out = scan_efficiencies(ells, gather(power, spec, ells), cfg);
  out.covered_mass /= power.sum();
  out.coverage_warning = out.covered_mass < kMinCoveredMass;
  return out;
}

GaussianFit fit_gaussian_wls(const OAMScanResult& result, const FitOptions& options) {
  const auto n = static_cast<Eigen::Index>(result.ells.size());
  Eigen::VectorXd ells(n);
  for (Eigen::Index i = 0; i < n; ++i) ells(i) = result.ells[static_cast<std::size_t>(i)];

  const double peak = n > 0 ? result.mean.maxCoeff() : 0.0;
  const double floor = std::pow(std::max(1.0, 0.01 * peak), 2);
  Eigen::VectorXd weights(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double var = std::max(result.stddev(i) * result.stddev(i), floor);
    if (options.weights == WeightMode::std_of_mean) var /= result.windows();
    weights(i) = 1.0 / var;
  }
  return fit_gaussian_wls(ells, result.mean, weights, options);
}

namespace {

struct Model {
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;
  const Eigen::VectorXd& w;
  double amplitude_scale;

  // p = (A / amplitude_scale, mu, s)
  double chi2(const Eigen::Vector3d& p) const {
    const Eigen::ArrayXd z = (x.array() - p(1)) / p(2);
    const Eigen::ArrayXd m = amplitude_scale * p(0) * (-0.5 * z.square()).exp();
    return (w.array() * (y.array() - m).square()).sum();
  }

  void linearize(const Eigen::Vector3d& p, Eigen::MatrixXd& jac, Eigen::VectorXd& resid) const {
    const Eigen::ArrayXd d = x.array() - p(1);
    const Eigen::ArrayXd e = (-0.5 * (d / p(2)).square()).exp();
    const Eigen::ArrayXd m = amplitude_scale * p(0) * e;
    jac.resize(x.size(), 3);
    jac.col(0) = (amplitude_scale * e).matrix();
    jac.col(1) = (m * d / (p(2) * p(2))).matrix();
    jac.col(2) = (m * d.square() / (p(2) * p(2) * p(2))).matrix();
    resid = y - m.matrix();
  }
};

}  // namespace

GaussianFit fit_gaussian_wls(const Eigen::VectorXd& ells, const Eigen::VectorXd& values,
                             const Eigen::VectorXd& weights, const FitOptions& options) {
  if (ells.size() != values.size() || ells.size() != weights.size()) {
    throw ConfigError("fit inputs must have equal length");
  }
  if ((values.array() > 0).count() < 5) {
    throw InsufficientData("need at least 5 scanned l values with nonzero counts");
  }

  // Moment initialization.
  const Eigen::VectorXd y_pos = values.cwiseMax(0.0);
  const double total = y_pos.sum();
  const double mu0 = ells.dot(y_pos) / total;
  const double var0 = (ells.array() - mu0).square().matrix().dot(y_pos) / total;
  const double peak = values.maxCoeff();
  if (!(var0 > 0)) throw InsufficientData("counts concentrated in a single bin");

  const Model model{ells, values, weights, peak};
  Eigen::Vector3d p(1.0, mu0, std::sqrt(var0));
  double chi2 = model.chi2(p);
  double lambda = 1e-3;

  GaussianFit fit;
  Eigen::MatrixXd jac;
  Eigen::VectorXd resid;
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    model.linearize(p, jac, resid);
    const Eigen::MatrixXd jtw = jac.transpose() * weights.asDiagonal();
    const Eigen::Matrix3d normal = jtw * jac;
    const Eigen::Vector3d g = jtw * resid;  // -1/2 grad chi2
    const double grad_norm = 2 * g.norm();
    if (grad_norm <= options.gradient_tolerance * std::max(1.0, chi2)) {
      fit.converged = true;
      break;
    }

    bool improved = false;
    while (lambda < 1e16) {
      Eigen::Matrix3d damped = normal;
      for (int k = 0; k < 3; ++k) damped(k, k) += lambda * std::max(normal(k, k), 1e-300);
      const Eigen::Vector3d trial = p + damped.ldlt().solve(g);
      const double trial_chi2 = trial(2) > 0 ? model.chi2(trial) : INFINITY;
      if (std::isfinite(trial_chi2) && trial_chi2 < chi2) {
        p = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        break;
      }
      lambda *= 10;
    }
    if (!improved) {
      // No representable step lowers chi2: accept if we sit at the floor.
      fit.converged = grad_norm <= 1e-6 * std::max(1.0, chi2);
      break;
    }
  }

  fit.amplitude = p(0) * peak;
  fit.center = p(1);
  fit.width = p(2);
  fit.residual_norm = std::sqrt(chi2);

  model.linearize(p, jac, resid);
  jac.col(0) /= peak;  // back to d m / d A
  const Eigen::Matrix3d info = jac.transpose() * weights.asDiagonal() * jac;
  const Eigen::Matrix3d cov = info.inverse();
  fit.center_confidence_3sigma = 3 * std::sqrt(std::max(cov(1, 1), 0.0));

  const bool finite = std::isfinite(fit.center) && std::isfinite(fit.width) &&
                      std::isfinite(fit.center_confidence_3sigma);
  if (!finite) fit.converged = false;
  if (options.require_convergence && !fit.converged) {
    throw FitDiverged("Gauss-Newton stopped after " + std::to_string(fit.iterations) +
                      " iterations without meeting the gradient tolerance");
  }
  return fit;
}

RealVector<double> angular_intensity(const Wavefunction& pointer,
                                     const std::optional<RealVector<double>>& leakage) {
  RealVector<double> profile = pointer.intensity();
  if (leakage) {
    if (leakage->size() != profile.size()) throw GridMismatch("leakage profile size mismatch");
    profile += *leakage;
  }
  return profile;
}

}  // namespace wva
