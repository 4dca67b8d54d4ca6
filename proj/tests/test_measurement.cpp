#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "wva/measurement.hpp"

using namespace wva;
using oracle::deg;
using oracle::pi;

namespace {

PostSelection imag_point(double eps = 0) {
  const auto initial = prepare_initial(Mode{deg(11.4)}, Grid());
  return post_select(evolve(initial, {deg(1.6), deg(10)}), deg(12), eps);
}

OAMScanConfig scan_cfg(double flux, std::uint64_t seed) {
  OAMScanConfig c;
  c.mean_flux = flux;
  c.rng_seed = seed;
  return c;
}

/// Gaussian mode carrying a (possibly non-integer) mean OAM mu.
Wavefunction twisted_gaussian(double eta, double mu) {
  const Grid g;
  auto f = make_angular_gaussian(Mode{eta}, g);
  ComplexVector<double> a = f.amplitudes();
  for (std::size_t k = 0; k < g.size(); ++k) {
    a(static_cast<Eigen::Index>(k)) *= std::polar(1.0, mu * g.angle(k));
  }
  return Wavefunction(g, a);
}

}  // namespace

TEST_SUITE("measurement") {

TEST_CASE("projective efficiency") {
  const Grid g(256);
  ComplexVector<double> a(256);
  for (std::size_t k = 0; k < 256; ++k) {
    a(static_cast<Eigen::Index>(k)) = std::polar(1 / std::sqrt(2 * pi), 3 * g.angle(k));
  }
  const Wavefunction mode(g, a);
  CHECK(projective_efficiency(mode, 3) == doctest::Approx(1).epsilon(1e-12));
  CHECK(projective_efficiency(mode, 2) < 1e-12);
  CHECK_THROWS_AS(projective_efficiency(mode, 500), EllOutOfRange);

  const double eta = deg(13.7);
  const auto f = make_angular_gaussian(Mode{eta}, Grid());
  const double ratio = projective_efficiency(f, 3) / projective_efficiency(f, 0);
  CHECK(ratio == doctest::Approx(std::exp(-9 * eta * eta)).epsilon(1e-10));
  CHECK(ratio == doctest::Approx(0.598).epsilon(1e-3));
}

TEST_CASE("scan configuration") {
  OAMScanConfig c;
  CHECK_NOTHROW(c.validate());
  c.windows = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.ell_min = 3;
  c.ell_max = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.mean_flux = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero flux gives zero counts") {
  const auto r = scan_oam(imag_point().pointer, scan_cfg(0, 1));
  CHECK(r.counts.cwiseAbs().maxCoeff() == 0);
  CHECK(r.stddev.cwiseAbs().maxCoeff() == 0);
  CHECK(r.ells.size() == 31);
  CHECK(r.windows() == 30);
}

TEST_CASE("scans are deterministic per seed") {
  const auto ps = imag_point();
  const auto a = scan_oam(ps, scan_cfg(5e4, 11));
  const auto b = scan_oam(ps, scan_cfg(5e4, 11));
  const auto c = scan_oam(ps, scan_cfg(5e4, 12));
  CHECK(a.counts == b.counts);
  CHECK(a.counts != c.counts);
  CHECK(substream_seed(1, 0, 0) != substream_seed(1, 1, 0));
  CHECK(substream_seed(1, 0, 0) != substream_seed(1, 0, 1));
  CHECK(substream_seed(1, 0, 0) != substream_seed(2, 0, 0));

  // Narrowing the l range does not change the counts of the remaining bins.
  auto narrow = scan_cfg(5e4, 11);
  narrow.ell_min = -5;
  narrow.ell_max = 5;
  const auto n = scan_oam(ps, narrow);
  CHECK(n.counts.row(0) == a.counts.row(10));
}

TEST_CASE("law of large numbers at the spectrum peak") {
  const auto r = scan_oam(imag_point().pointer, scan_cfg(5e7, 3));
  Eigen::Index peak = 0;
  r.expected.maxCoeff(&peak);
  CHECK(r.expected(peak) >= 1e6);
  const double ratio = r.mean(peak) / r.expected(peak);
  CHECK(ratio >= 0.99);
  CHECK(ratio <= 1.01);
  CHECK(r.covered_mass > 0.999);
  CHECK_FALSE(r.coverage_warning);
}

TEST_CASE("coverage warning for a truncated scan") {
  auto c = scan_cfg(1e3, 1);
  c.ell_min = 0;
  c.ell_max = 2;
  const auto r = scan_oam(imag_point().pointer, c);
  CHECK(r.coverage_warning);
  CHECK(r.covered_mass < 0.99);
}

TEST_CASE("Poisson sampler moments") {
  constexpr int n = 100000;
  std::mt19937_64 rng(2024);
  for (double m : {0.1, 1.0, 10.0, 1000.0}) {
    std::vector<double> x(n);
    for (auto& v : x) v = static_cast<double>(sample_poisson(m, rng));
    double mean = 0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n - 1;
    CHECK(std::abs(mean - m) <= 5 * std::sqrt(m / n));
    const double var_of_var = (m + 3 * m * m - m * m * (n - 3.0) / (n - 1.0)) / n;
    CHECK(std::abs(var - m) <= 5 * std::sqrt(var_of_var));
  }
  CHECK(sample_poisson(0, rng) == 0);
  CHECK(sample_poisson(-1, rng) == 0);
}

TEST_CASE("noiseless Gaussian spectrum is fitted exactly") {
  for (double mu : {0.0, 1.66, -2.3}) {
    const auto psi = twisted_gaussian(deg(11.4), mu);
    const auto spec = oam_transform(psi);
    const double truth = centroid_ell(spec);
    CHECK(truth == doctest::Approx(mu).epsilon(1e-9));

    Eigen::VectorXd ells(31), eff(31);
    for (int i = 0; i < 31; ++i) {
      ells(i) = i - 15;
      eff(i) = 1e4 * spec.power(i - 15);
    }
    const auto fit = fit_gaussian_wls(ells, eff, Eigen::VectorXd::Ones(31));
    CHECK(fit.converged);
    CHECK(std::abs(fit.center - truth) < 1e-6);
    // Moment estimates of the true Gaussian: s = 1 / (sqrt(2) eta).
    CHECK(fit.width == doctest::Approx(1 / (std::sqrt(2.0) * deg(11.4))).epsilon(1e-6));
    CHECK(fit.center_confidence_3sigma > 0);
    CHECK(fit.residual_norm < 1e-6);
  }
}

TEST_CASE("fit input errors") {
  OAMScanResult empty = scan_oam(imag_point().pointer, scan_cfg(0, 1));
  CHECK_THROWS_AS(fit_gaussian_wls(empty), InsufficientData);

  Eigen::VectorXd ells = Eigen::VectorXd::LinSpaced(9, -4, 4);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(9);
  y.segment(3, 3) << 1, 5, 1;
  CHECK_THROWS_AS(fit_gaussian_wls(ells, y, Eigen::VectorXd::Ones(9)), InsufficientData);
  CHECK_THROWS_AS(fit_gaussian_wls(ells, y, Eigen::VectorXd::Ones(4)), ConfigError);

  const auto scan = scan_oam(imag_point(), scan_cfg(5e4, 4));
  FitOptions opts;
  opts.max_iterations = 1;
  CHECK_THROWS_AS(fit_gaussian_wls(scan, opts), FitDiverged);
  opts.require_convergence = false;
  CHECK_FALSE(fit_gaussian_wls(scan, opts).converged);
}

TEST_CASE("shot-noise fits cover the simulated shift") {
  const auto ps = imag_point();
  const double truth = centroid_ell(oam_transform(ps.pointer));
  CHECK(truth == doctest::Approx(1.4384).epsilon(1e-4));
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto fit = fit_gaussian_wls(scan_oam(ps, scan_cfg(5e4, seed)));
    CHECK(fit.converged);
    CHECK(fit.width > 0);
    CHECK(std::abs(fit.center - truth) <= fit.center_confidence_3sigma);
  }
}

TEST_CASE("std-of-mean weights shrink the interval by sqrt(windows)") {
  const auto scan = scan_oam(imag_point(), scan_cfg(5e4, 9));
  FitOptions om;
  om.weights = WeightMode::std_of_mean;
  const auto a = fit_gaussian_wls(scan);
  const auto b = fit_gaussian_wls(scan, om);
  CHECK(b.center_confidence_3sigma ==
        doctest::Approx(a.center_confidence_3sigma / std::sqrt(30.0)).epsilon(0.05));
}

TEST_CASE("narrower modes give larger OAM shifts") {
  // Weak regime: d<l> * eta^2 is constant.
  const auto shift = [](double eta_deg) {
    const auto initial = prepare_initial(Mode{deg(eta_deg)}, Grid());
    const auto ps = post_select(evolve(initial, {deg(0.1), deg(4)}), deg(40));
    return centroid_ell(oam_transform(ps.pointer)) * std::pow(deg(eta_deg), 2);
  };
  const double ref = shift(11.4);
  for (double eta : {8.0, 13.7, 20.0}) CHECK(shift(eta) == doctest::Approx(ref).epsilon(0.02));
}

TEST_CASE("angular intensity and leakage") {
  const auto ps = imag_point();
  const auto profile = angular_intensity(ps.pointer);
  CHECK(profile.sum() * ps.pointer.grid().spacing() == doctest::Approx(1).epsilon(1e-12));
  CHECK(intensity_moments(ps.pointer.grid(), profile).centroid ==
        doctest::Approx(centroid_phi(ps.pointer)));
  CHECK_THROWS_AS(angular_intensity(ps.pointer, RealVector<double>::Zero(3)), GridMismatch);

  // Amp ~ 100 with epsilon = 1e-4: the leakage floor rivals the signal.
  const auto initial = prepare_initial(Mode{deg(13.7)}, Grid());
  const auto leaky = post_select(evolve(initial, {4e-4, 0}), 0.01, 1e-4);
  const double clean = centroid_phi(leaky.pointer);
  const double measured =
      intensity_moments(leaky.pointer.grid(), angular_intensity(leaky.pointer, leaky.leakage_intensity))
          .centroid;
  CHECK(leaky.leakage_intensity.sum() > 0.5 * leaky.pointer.intensity().sum());
  CHECK(std::abs(measured) < 0.5 * std::abs(clean));

  // The scan sees the leakage as extra counts.
  const auto with = scan_oam(leaky, scan_cfg(1e4, 1));
  const auto without = scan_oam(leaky.pointer, scan_cfg(1e4, 1));
  CHECK(with.expected.sum() > 1.5 * without.expected.sum());
}

}
