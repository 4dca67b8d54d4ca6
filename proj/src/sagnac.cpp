#include "wva/sagnac.hpp"

#include <algorithm>
#include <cmath>

namespace wva {

VectorBeamState::VectorBeamState(Wavefunction h, Wavefunction v)
    : h_(std::move(h)), v_(std::move(v)) {
  if (!(h_.grid() == v_.grid())) throw GridMismatch("H and V components on different grids");
}

VectorBeamState prepare_initial(const Mode& pointer, const Grid& grid) {
  const Wavefunction f = make_angular_gaussian(pointer, grid);
  const ComplexVector<double> half = f.amplitudes() / std::sqrt(2.0);
  return {Wavefunction(grid, half), Wavefunction(grid, half)};
}

VectorBeamState apply_dove_prism(const VectorBeamState& state, double delta_phi) {
  return {rotate(state.h(), delta_phi / 2), rotate(state.v(), -delta_phi / 2)};
}

VectorBeamState apply_geometric_phase(const VectorBeamState& state, double theta) {
  const auto ph = std::polar(1.0, -theta / 2);
  const auto pv = std::polar(1.0, theta / 2);
  return {Wavefunction(state.grid(), state.h().amplitudes() * ph),
          Wavefunction(state.grid(), state.v().amplitudes() * pv)};
}

VectorBeamState evolve(const VectorBeamState& initial, const DoveCoupling& coupling) {
  return apply_geometric_phase(apply_dove_prism(initial, coupling.delta_phi), coupling.theta);
}

VectorBeamState swap_arms(const VectorBeamState& state) { return {state.v(), state.h()}; }

PostSelection post_select(const VectorBeamState& state, double gamma, double extinction_ratio) {
  const Polarizer<double> polarizer = polarizer_projector(gamma / 2, extinction_ratio);
  const JonesVector<double> pass = post_selection_state(gamma);
  const JonesVector<double> block(pass(1), -pass(0));

  const auto project = [&](const JonesVector<double>& onto) {
    ComplexVector<double> amps = std::conj(onto(0)) * state.h().amplitudes() +
                                 std::conj(onto(1)) * state.v().amplitudes();
    return Wavefunction(state.grid(), std::move(amps));
  };

  const Wavefunction projected = project(pass);
  const double probability = projected.norm_squared();
  if (!(probability > kMinPostSelectionProbability)) {
    throw PostSelectionSingular("post-selection probability " + std::to_string(probability) +
                                " is numerically zero");
  }
  const double scale = 1.0 / std::sqrt(probability);
  Wavefunction pointer(state.grid(), projected.amplitudes() * scale);
  Wavefunction blocked(state.grid(), project(block).amplitudes() * scale);
  RealVector<double> leakage = polarizer.extinction_ratio * blocked.intensity();
  return {std::move(pointer), probability, std::move(leakage), std::move(blocked),
          polarizer.extinction_ratio};
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::weak: return "weak";
    case Regime::near_boundary: return "near-boundary";
    case Regime::outside: return "outside";
  }
  return "unknown";
}

RegimeAssessment assess_regime(double eta_phi, double delta_phi,
                               std::complex<double> weak_value) {
  if (!(eta_phi > 0)) throw WidthOutOfRange("eta_phi must be positive");
  const double coupling = std::abs(delta_phi) / eta_phi;
  const double shift = std::abs(weak_value) * std::abs(delta_phi) / (2 * eta_phi);
  Regime regime = Regime::outside;
  if (coupling <= 0.1 && shift <= 0.1) {
    regime = Regime::weak;
  } else if (coupling <= 0.5 && shift <= 0.2) {
    regime = Regime::near_boundary;
  }
  return {coupling, shift, regime};
}

}  // namespace wva
