#include <doctest.h>

#include "oracles.hpp"
#include "wva/sagnac.hpp"
#include "wva/weak_value.hpp"

using namespace wva;
using oracle::deg;
using oracle::pi;

namespace {

PostSelection run(double gamma, double theta, double eta, double dphi, double eps = 0,
                  std::size_t n = 4096) {
  const auto initial = prepare_initial(Mode{eta}, Grid(n));
  return post_select(evolve(initial, {dphi, theta}), gamma, eps);
}

}  // namespace

TEST_SUITE("sagnac") {

TEST_CASE("initial state") {
  const auto s = prepare_initial(Mode{deg(13.7)}, Grid());
  CHECK(s.norm_squared() == doctest::Approx(1).epsilon(1e-12));
  CHECK(s.h().amplitudes() == s.v().amplitudes());
  CHECK_THROWS_AS(VectorBeamState(s.h(), Wavefunction(Grid(64), ComplexVector<double>::Zero(64))),
                  GridMismatch);
}

TEST_CASE("Dove prism rotates the arms oppositely") {
  const auto s = apply_dove_prism(prepare_initial(Mode{deg(13.7)}, Grid()), deg(1.2));
  CHECK(centroid_phi(s.h().normalized()) == doctest::Approx(deg(0.6)).epsilon(1e-10));
  CHECK(centroid_phi(s.v().normalized()) == doctest::Approx(deg(-0.6)).epsilon(1e-10));
  CHECK(s.norm_squared() == doctest::Approx(1).epsilon(1e-12));
  // <h|v> = exp(-dphi^2 / (4 eta^2)) / 2
  const double overlap = 2 * inner_product(s.h(), s.v()).real();
  CHECK(overlap == doctest::Approx(std::exp(-std::pow(deg(1.2), 2) / (4 * std::pow(deg(13.7), 2))))
                       .epsilon(1e-12));
  CHECK(overlap == doctest::Approx(0.998084).epsilon(1e-6));
}

TEST_CASE("evolution is unitary and symmetric under arm exchange") {
  const auto initial = prepare_initial(Mode{deg(11.4)}, Grid());
  const auto f = evolve(initial, {deg(1.6), deg(10)});
  CHECK(std::abs(f.norm_squared() - 1) < 1e-12);
  const auto phase = apply_geometric_phase(initial, deg(10));
  CHECK(std::arg(inner_product(phase.v(), phase.h())) == doctest::Approx(-deg(10)));
  const auto swapped = swap_arms(f);
  CHECK(swapped.h().amplitudes() == f.v().amplitudes());
}

TEST_CASE("post-selection against the two-Gaussian closed form") {
  struct P { double gamma, theta, eta, dphi; };
  for (const P& p : {P{deg(2 * 20), 0, deg(13.7), deg(1.2)},
                     P{0.05, 0, deg(13.7), deg(1.2)},
                     P{deg(12), deg(10), deg(11.4), deg(1.6)},
                     P{deg(8), -deg(6), deg(8), deg(3)},
                     P{0.01, 0, deg(13.7), 4e-4}}) {
    const auto ps = run(p.gamma, p.theta, p.eta, p.dphi);
    const auto o = oracle::post_selected(p.gamma, p.theta, p.eta, p.dphi);
    CHECK(ps.probability == doctest::Approx(o.probability).epsilon(1e-10));
    CHECK(centroid_phi(ps.pointer) == doctest::Approx(o.centroid_phi).epsilon(1e-9));
    CHECK(centroid_ell(oam_transform(ps.pointer)) == doctest::Approx(o.centroid_ell).epsilon(1e-9));
    CHECK(ps.pointer.norm_squared() == doctest::Approx(1).epsilon(1e-12));
  }
}

TEST_CASE("projective post-selection gives the eigenvalue shift") {
  const auto ps = run(pi / 2, 0, deg(13.7), deg(1.2));
  CHECK(centroid_phi(ps.pointer) == doctest::Approx(deg(-0.6)).epsilon(1e-10));
  CHECK(ps.probability == doctest::Approx(0.5));
}

TEST_CASE("more aggressive post-selection: larger shift, fewer photons") {
  double prev_shift = 0;
  double prev_p = 1;
  for (double gh : {45.0, 20.0, 10.0, 5.0, 3.0}) {
    const auto ps = run(deg(2 * gh), 0, deg(13.7), deg(1.2));
    const double shift = std::abs(centroid_phi(ps.pointer));
    CHECK(shift > prev_shift);
    CHECK(ps.probability < prev_p);
    prev_shift = shift;
    prev_p = ps.probability;
  }
}

TEST_CASE("no geometric phase, no OAM shift") {
  for (double g : {0.05, 0.2, 1.0}) {
    CHECK(std::abs(centroid_ell(oam_transform(run(g, 0, deg(11.4), deg(1.6)).pointer))) < 1e-12);
  }
}

TEST_CASE("polarizer leakage") {
  const auto clean = run(0.01, 0, deg(13.7), 4e-4);
  CHECK(clean.leakage_intensity.cwiseAbs().maxCoeff() == 0);
  const auto leaky = run(0.01, 0, deg(13.7), 4e-4, 1e-4);
  CHECK(leaky.leakage_intensity.isApprox(1e-4 * leaky.blocked.intensity()));
  // Blocked plus transmitted probability is the full beam.
  CHECK(leaky.probability * (1 + leaky.blocked.norm_squared()) == doctest::Approx(1).epsilon(1e-12));
  CHECK_THROWS_AS(run(0.01, 0, deg(13.7), 4e-4, 0.5), ConfigError);
}

TEST_CASE("orthogonal post-selection without coupling is singular") {
  CHECK_THROWS_AS(run(0, 0, deg(13.7), 0), PostSelectionSingular);
}

TEST_CASE("regime classification") {
  const double eta = deg(13.7);
  CHECK(assess_regime(eta, 1e-4, -2.0).regime == Regime::weak);
  CHECK(assess_regime(eta, 4e-4, -200.0).regime == Regime::near_boundary);
  CHECK(assess_regime(eta, deg(1.2), -40.0).regime == Regime::outside);
  CHECK(assess_regime(eta, 0.5 * eta, -1.0).regime == Regime::outside);
  const auto r = assess_regime(eta, 0.01, {3.0, 4.0});
  CHECK(r.coupling_ratio == doctest::Approx(0.01 / eta));
  CHECK(r.shift_ratio == doctest::Approx(5 * 0.01 / (2 * eta)));
  CHECK(to_string(Regime::near_boundary) == "near-boundary");
  CHECK_THROWS_AS(assess_regime(0.0, 0.1, 1.0), WidthOutOfRange);
}

}
