#pragma once

// Closed-form weak values of the polarization Pauli operator and the pointer
// shifts they predict.
//
// gamma sets the post-selection |Phi_ps> = sin(gamma/2 - pi/4)|H> + cos(gamma/2 - pi/4)|V>,
// theta = theta_H - pi is the relative geometric phase between the arms.

#include <cmath>
#include <complex>
#include <string_view>

#include "wva/error.hpp"
#include "wva/polarization.hpp"

namespace wva {

enum class WeakValueFlavor { exact, approximate };

inline std::string_view to_string(WeakValueFlavor f) {
  return f == WeakValueFlavor::exact ? "analytic-exact" : "analytic-approx";
}

template <typename Scalar = double>
struct WeakValue {
  std::complex<Scalar> value;
  Scalar gamma;
  Scalar theta;
  WeakValueFlavor flavor;
};

template <typename Scalar = double>
struct ShiftPrediction {
  Scalar d_phi_mean;     // radians
  Scalar d_ell_mean;     // OAM units
  Scalar amplification;  // Re(sigma_w)/2
  WeakValueFlavor flavor;
};

inline constexpr double kWeakValueSingularity = 1e-12;

/// sigma_w = (tan(g/2 - pi/4) e^{-i t} - 1) / (tan(g/2 - pi/4) e^{-i t} + 1),
/// evaluated in rationalized form so neither the tan pole nor the
/// near-orthogonal cancellation costs precision.
template <typename Scalar>
WeakValue<Scalar> weak_value_exact(Scalar gamma, Scalar theta) {
  const Scalar sg = std::sin(gamma / 2);
  const Scalar st = std::sin(theta / 2);
  // |sin(a) e^{-i t} + cos(a)|^2 with a = gamma/2 - pi/4
  const Scalar den = 2 * sg * sg + 2 * std::cos(gamma) * st * st;
  if (std::sqrt(std::abs(den)) <= Scalar(kWeakValueSingularity)) {
    throw WeakValueSingular("post-selection orthogonal to the probe (gamma = theta = 0)");
  }
  const std::complex<Scalar> num(-std::sin(gamma), std::cos(gamma) * std::sin(theta));
  return {num / den, gamma, theta, WeakValueFlavor::exact};
}

/// Small-angle form -2 gamma/(gamma^2 + theta^2) + i 2 theta/(gamma^2 + theta^2).
template <typename Scalar>
WeakValue<Scalar> weak_value_approx(Scalar gamma, Scalar theta) {
  const Scalar den = gamma * gamma + theta * theta;
  if (!(den > 0)) throw WeakValueSingular("gamma = theta = 0");
  return {std::complex<Scalar>(-2 * gamma / den, 2 * theta / den), gamma, theta,
          WeakValueFlavor::approximate};
}

/// <post|sigma|pre> / <post|pre>
template <typename Scalar>
std::complex<Scalar> weak_value_from_states(const JonesVector<Scalar>& pre,
                                            const JonesVector<Scalar>& post) {
  const std::complex<Scalar> overlap = post.dot(pre);
  if (std::abs(overlap) <= Scalar(kWeakValueSingularity)) {
    throw WeakValueSingular("pre- and post-selected states are orthogonal");
  }
  return post.dot(pauli_sigma<Scalar>() * pre) / overlap;
}

template <typename Scalar>
ShiftPrediction<Scalar> predict_shifts(const WeakValue<Scalar>& wv, Scalar delta_phi,
                                       Scalar eta_phi) {
  if (!(eta_phi > 0)) throw WidthOutOfRange("eta_phi must be positive");
  return {wv.value.real() * delta_phi / 2,
          wv.value.imag() * delta_phi / (2 * eta_phi * eta_phi),
          wv.value.real() / 2,
          wv.flavor};
}

/// Post-selection angle gamma giving |Amp| = amplification at theta = 0,
/// from the small-angle weak value (Amp = -1/gamma).
template <typename Scalar>
Scalar gamma_for_amplification(Scalar amplification) {
  if (!(std::abs(amplification) > 0)) throw ConfigError("amplification must be nonzero");
  return Scalar(1) / std::abs(amplification);
}

}  // namespace wva
