#pragma once

// Jones calculus for the probe: states, waveplates, the QWP-HWP-QWP
// geometric-phase stack and the post-selection polarizer.
//
// Basis: |H> = (1, 0), |V> = (0, 1). Matrices act on column vectors, so a
// product A * B * C applies C first.

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "wva/error.hpp"

namespace wva {

template <typename Scalar = double>
using JonesVector = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar = double>
using JonesMatrix = Eigen::Matrix<std::complex<Scalar>, 2, 2>;

/// Propagation sense inside the Sagnac loop: H circulates forward, V backward.
enum class Direction { forward, backward };

template <typename Scalar = double>
JonesVector<Scalar> horizontal() {
  return JonesVector<Scalar>(1, 0);
}

template <typename Scalar = double>
JonesVector<Scalar> vertical() {
  return JonesVector<Scalar>(0, 1);
}

/// Pre-selected probe (|H> + |V>)/sqrt(2).
template <typename Scalar = double>
JonesVector<Scalar> diagonal() {
  const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
  return JonesVector<Scalar>(r, r);
}

/// Probe after the waveplate stack: (e^{-i theta/2}|H> + e^{i theta/2}|V>)/sqrt(2),
/// theta = theta_H - pi.
template <typename Scalar>
JonesVector<Scalar> phase_shifted_probe(Scalar theta) {
  const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
  return JonesVector<Scalar>(std::polar(r, -theta / 2), std::polar(r, theta / 2));
}

/// Post-selection state sin(gamma/2 - pi/4)|H> + cos(gamma/2 - pi/4)|V>.
template <typename Scalar>
JonesVector<Scalar> post_selection_state(Scalar gamma) {
  const Scalar a = gamma / 2 - std::numbers::pi_v<Scalar> / 4;
  return JonesVector<Scalar>(std::sin(a), std::cos(a));
}

/// The polarization Pauli operator |H><H| - |V><V|.
template <typename Scalar = double>
JonesMatrix<Scalar> pauli_sigma() {
  JonesMatrix<Scalar> m;
  m << 1, 0, 0, -1;
  return m;
}

/// Quarter-wave plate with fast axis at theta_q from x. Retardation
/// phi_y - phi_x = pi/2 with the global phase fixed by phi_x = 0.
template <typename Scalar>
JonesMatrix<Scalar> qwp(Scalar theta_q) {
  using C = std::complex<Scalar>;
  const Scalar c = std::cos(theta_q);
  const Scalar s = std::sin(theta_q);
  const C ex(1, 0);
  const C ey(0, 1);
  JonesMatrix<Scalar> m;
  m << ex * c * c + ey * s * s, (ex - ey) * c * s,
       (ex - ey) * c * s,       ex * s * s + ey * c * c;
  return m;
}

template <typename Scalar>
JonesMatrix<Scalar> hwp(Scalar theta_h) {
  const Scalar c = std::cos(2 * theta_h);
  const Scalar s = std::sin(2 * theta_h);
  JonesMatrix<Scalar> m;
  m << c, s, s, -c;
  return m;
}

/// QWP(+-pi/4) . HWP(+-theta_H/4) . QWP(+-pi/4), sign set by direction.
/// Forward acting on |H> gives exp(-i(theta_H/2 - pi/2))|H>; backward acting
/// on |V> gives exp(+i(theta_H/2 - pi/2))|V>.
template <typename Scalar>
JonesMatrix<Scalar> geometric_phase_stack(Scalar theta_h, Direction direction) {
  const Scalar sign = direction == Direction::forward ? Scalar(1) : Scalar(-1);
  const auto q = qwp(sign * std::numbers::pi_v<Scalar> / 4);
  return q * hwp(sign * theta_h / 4) * q;
}

/// Linear polarizer passing |Phi_ps>. A nonzero extinction ratio lets the
/// orthogonal component through as incoherent intensity: the detected
/// intensity is |transmit psi|^2 + extinction_ratio * |leak psi|^2.
template <typename Scalar = double>
struct Polarizer {
  JonesMatrix<Scalar> transmit;
  JonesMatrix<Scalar> leak;
  Scalar extinction_ratio = 0;
};

inline constexpr double kMaxExtinctionRatio = 1e-2;

/// gamma_half is the polarizer angle gamma/2 measured from the antidiagonal.
template <typename Scalar>
Polarizer<Scalar> polarizer_projector(Scalar gamma_half, Scalar extinction_ratio = 0) {
  if (!(extinction_ratio >= 0) || extinction_ratio > Scalar(kMaxExtinctionRatio)) {
    throw ConfigError("extinction ratio must lie in [0, 1e-2], got " +
                      std::to_string(extinction_ratio));
  }
  const JonesVector<Scalar> pass = post_selection_state(2 * gamma_half);
  const JonesVector<Scalar> block(pass(1), -pass(0));
  return {pass * pass.adjoint(), block * block.adjoint(), extinction_ratio};
}

}  // namespace wva
