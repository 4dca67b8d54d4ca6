#pragma once

// Exact evolution of the polarization-tagged angular mode through the Sagnac
// loop, and projection onto the post-selected polarization.

#include <complex>
#include <string_view>

#include "wva/angular.hpp"
#include "wva/polarization.hpp"

namespace wva {

using Grid = AngularGrid<double>;
using Wavefunction = AngularWavefunction<double>;
using Spectrum = OAMSpectrum<double>;
using Mode = ModeParams<double>;

/// Joint probe-pointer state: the H- and V-tagged angular amplitudes.
class VectorBeamState {
 public:
  VectorBeamState(Wavefunction h, Wavefunction v);

  const Wavefunction& h() const noexcept { return h_; }
  const Wavefunction& v() const noexcept { return v_; }
  const Grid& grid() const noexcept { return h_.grid(); }

  double norm_squared() const { return h_.norm_squared() + v_.norm_squared(); }

 private:
  Wavefunction h_;
  Wavefunction v_;
};

/// Only the products mu*dt and delta*dt of the coupling Hamiltonians matter,
/// so the coupling is stored as the rotation and phase they produce.
struct DoveCoupling {
  double delta_phi = 0;  // full relative rotation between the arms (rad)
  double theta = 0;      // geometric phase theta_H - pi (rad)
};

VectorBeamState prepare_initial(const Mode& pointer, const Grid& grid);

/// h -> f(phi - dphi/2), v -> f(phi + dphi/2).
VectorBeamState apply_dove_prism(const VectorBeamState& state, double delta_phi);

/// h -> e^{-i theta/2} h, v -> e^{+i theta/2} v.
VectorBeamState apply_geometric_phase(const VectorBeamState& state, double theta);

VectorBeamState evolve(const VectorBeamState& initial, const DoveCoupling& coupling);

/// Exchanges the H and V components.
VectorBeamState swap_arms(const VectorBeamState& state);

inline constexpr double kMinPostSelectionProbability = 1e-12;

struct PostSelection {
  Wavefunction pointer;  // normalized
  double probability;    // squared norm of <Phi_ps|Psi_f> before normalization
  /// Incoherent polarizer leakage per radian, in the units of the normalized
  /// pointer intensity (extinction * |<Phi_perp|Psi_f>|^2 / probability).
  RealVector<double> leakage_intensity;
  /// <Phi_perp|Psi_f> scaled by the same factor as the pointer.
  Wavefunction blocked;
  double extinction_ratio;
};

/// Projects onto |Phi_ps(gamma)>.
PostSelection post_select(const VectorBeamState& state, double gamma,
                          double extinction_ratio = 0);

enum class Regime { weak, near_boundary, outside };

std::string_view to_string(Regime regime);

struct RegimeAssessment {
  double coupling_ratio;  // |dphi| / eta
  double shift_ratio;     // |sigma_w| |dphi| / (2 eta)
  Regime regime;
};

/// Classifies where the first-order weak-value description can be trusted.
RegimeAssessment assess_regime(double eta_phi, double delta_phi,
                               std::complex<double> weak_value);

}  // namespace wva
