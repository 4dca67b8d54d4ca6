#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "wva/report_io.hpp"
#include "wva/scenario.hpp"

using namespace wva;
using oracle::deg;

namespace {

ExperimentConfig small(RunMode mode) {
  ExperimentConfig c = default_config(mode);
  c.grid = 256;
  c.seed = 5;
  return c;
}

double entry(const RunReport& r, int point, const std::string& q, const std::string& source) {
  for (const auto& e : r.entries) {
    if (e.point == point && e.quantity == q && e.source == source) return e.value;
  }
  FAIL("missing entry " << q << " / " << source);
  return 0;
}

std::string all_csv(const RunReport& r) {
  std::string s = to_csv(long_format(r)) + config_to_ini(r.config, r.version);
  for (const auto& t : r.tables) s += t.name + "\n" + to_csv(t);
  return s;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("configuration validation") {
  for (auto m : {RunMode::real_wv, RunMode::imag_wv, RunMode::sweep, RunMode::validate}) {
    auto c = default_config(m);
    c.seed = 1;
    CHECK_NOTHROW(c.validate());
  }
  auto c = default_config(RunMode::imag_wv);
  CHECK(c.stochastic());
  CHECK_THROWS_AS(c.validate(), ConfigError);  // no seed
  CHECK_FALSE(default_config(RunMode::real_wv).stochastic());
  CHECK_FALSE(default_config(RunMode::sweep).stochastic());

  c.seed = 1;
  c.theta_half_deg = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(RunMode::real_wv);
  c.delta_phi_deg = std::nan("");
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(RunMode::real_wv);
  c.grid = 96;
  CHECK_THROWS_AS(c.validate(), InvalidGrid);
  c = small(RunMode::real_wv);
  c.eta_phi_deg = 60;
  CHECK_THROWS_AS(c.validate(), WidthOutOfRange);
  c = small(RunMode::real_wv);
  c.gamma_half_deg.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(RunMode::real_wv);
  c.extinction_ratio = 0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("real-wv: monotone rotation, falling probability, projective limit") {
  const auto rep = run_real_wv(small(RunMode::real_wv));
  REQUIRE(rep.points.size() == 5);
  CHECK(rep.points[0].amplification == doctest::Approx(-0.5).epsilon(1e-9));
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    CHECK(std::abs(rep.points[i].d_phi_measured) > std::abs(rep.points[i - 1].d_phi_measured));
    CHECK(rep.points[i].probability < rep.points[i - 1].probability);
  }
  CHECK(rep.tables.size() == 6);
  CHECK(rep.tables[0].name == "real_wv_amplification.csv");
  CHECK(rep.tables[1].rows.size() == 256);
  CHECK(rep.exit_code() == 3);  // the aggressive points leave the weak regime

  auto th = small(RunMode::real_wv);
  th.theta_half_deg = 3;
  const auto forced = run_real_wv(th);
  CHECK(forced.points[0].params.theta == 0);
  CHECK(forced.config.theta_half_deg == 0);
}

TEST_CASE("every point cross-states exact, approximate and simulated values") {
  const auto rep = run_imag_wv(small(RunMode::imag_wv));
  const std::set<std::string> labels{"analytic-exact", "analytic-approx", "simulated", "fitted"};
  for (const auto& e : rep.entries) CHECK(labels.count(e.source) == 1);
  for (int i = 0; i < static_cast<int>(rep.points.size()); ++i) {
    for (const char* q : {"delta_phi_mean_rad", "delta_ell_mean", "amplification"}) {
      for (const char* s : {"analytic-exact", "analytic-approx", "simulated"}) {
        CHECK(std::isfinite(entry(rep, i, q, s)));
      }
    }
    CHECK(std::isfinite(entry(rep, i, "delta_ell_mean", "fitted")));
  }
  // Disagreement is flagged, not averaged away.
  CHECK_FALSE(rep.flags.empty());
  CHECK(rep.regime_violation);
}

TEST_CASE("imag-wv reference scan is centered") {
  const auto rep = run_imag_wv(small(RunMode::imag_wv));
  CHECK(std::abs(entry(rep, -1, "reference_delta_ell_mean", "simulated")) < 1e-12);
  const double s = entry(rep, -1, "delta_phi_rad", "analytic-exact");
  CHECK(s == doctest::Approx(deg(1.6)));
}

TEST_CASE("reports are byte-reproducible") {
  const auto c = small(RunMode::imag_wv);
  CHECK(all_csv(run_imag_wv(c)) == all_csv(run_imag_wv(c)));
  auto d = c;
  d.seed = 6;
  CHECK(all_csv(run_imag_wv(c)) != all_csv(run_imag_wv(d)));
  auto s = small(RunMode::sweep);
  s.mean_flux = 5e4;
  s.sweep.theta_half_deg = {3, 5};
  CHECK(all_csv(run_sweep(s).aggregate) == all_csv(run_sweep(s).aggregate));
}

TEST_CASE("sweep expansion") {
  auto c = small(RunMode::sweep);
  c.sweep.gamma_half_deg = {4, 6};
  c.sweep.theta_half_deg = {0, 5, 7};
  c.sweep.eta_phi_deg = {11.4};
  const auto pts = expand_points(c);
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].gamma == doctest::Approx(deg(8)));
  CHECK(pts[1].gamma == doctest::Approx(deg(12)));
  CHECK(pts[2].theta == doctest::Approx(deg(10)));
}

TEST_CASE("single-point sweep equals a single run") {
  auto im = small(RunMode::imag_wv);
  im.gamma_half_deg = {6};
  auto sw = im;
  sw.mode = RunMode::sweep;
  const auto a = run_imag_wv(im);
  const auto b = run_sweep(sw);
  REQUIRE(b.points.size() == 1);
  const auto& pa = a.points[0];
  const auto& pb = b.points[0].points[0];
  CHECK(pa.d_ell_measured == pb.d_ell_measured);
  CHECK(pa.d_phi_measured == pb.d_phi_measured);
  CHECK(pa.fit->center == pb.fit->center);
  CHECK(pa.fit->center_confidence_3sigma == pb.fit->center_confidence_3sigma);
}

TEST_CASE("four-point gamma sweep reproduces the imag-wv run") {
  const auto im = small(RunMode::imag_wv);
  auto sw = im;
  sw.mode = RunMode::sweep;
  sw.sweep.gamma_half_deg = {4, 5, 6, 8};
  const auto a = run_imag_wv(im);
  const auto b = run_sweep(sw);
  REQUIRE(b.points.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.points[i].fit->center == b.aggregate.points[i].fit->center);
    CHECK(a.points[i].seed == b.aggregate.points[i].seed);
  }
  CHECK(b.aggregate.tables[0].rows.size() == 4);
}

TEST_CASE("Amp * gamma -> -1 as gamma -> 0") {
  auto c = small(RunMode::sweep);
  c.grid = 4096;
  c.seed.reset();
  c.theta_half_deg = 0;
  c.delta_phi_deg = 1e-5;
  c.eta_phi_deg = 13.7;
  c.sweep.gamma_half_deg = {8, 4, 2, 1, 0.5};
  const auto r = run_sweep(c);
  double prev = 1;
  for (const auto& p : r.aggregate.points) {
    const double gap = std::abs(p.amplification * p.params.gamma + 1);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-4);
  CHECK(r.aggregate.exit_code() == 0);
}

TEST_CASE("validate: default passes, injected coupling is a regime violation") {
  auto c = default_config(RunMode::validate);
  c.seed = 3;
  const auto ok = run_validate(c);
  for (const auto& chk : ok.checks) CHECK_MESSAGE(chk.passed, chk.name);
  CHECK(ok.exit_code() == 0);

  c.delta_phi_deg = 0.5 * c.eta_phi_deg;
  const auto bad = run_validate(c);
  CHECK(bad.regime_violation);
  CHECK_FALSE(bad.failed);
  CHECK(bad.exit_code() == 3);
}

TEST_CASE("slope through the origin") {
  const auto s = slope_through_origin({1, 2, 3}, {2, 4, 6});
  CHECK(s.slope == doctest::Approx(2));
  const auto w = slope_through_origin({1, 2}, {1, 2}, {0.5, 0.5});
  CHECK(w.sigma == doctest::Approx(0.5 / std::sqrt(5.0)));
  CHECK_THROWS_AS(slope_through_origin({0, 0}, {1, 2}), InsufficientData);
  CHECK_THROWS_AS(slope_through_origin({}, {}), ConfigError);
}

TEST_CASE("numerical failure maps to exit code 4") {
  auto c = small(RunMode::sweep);
  c.seed.reset();
  c.sweep.gamma_half_deg = {0};
  c.sweep.theta_half_deg = {0};
  CHECK_THROWS_AS(run_sweep(c), WeakValueSingular);
  CHECK(WeakValueSingular("x").category() == ErrorCategory::numerical);
  RunReport r;
  r.failed = true;
  r.regime_violation = true;
  CHECK(r.exit_code() == 4);
}

}
