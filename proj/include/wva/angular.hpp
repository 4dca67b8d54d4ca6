#pragma once

// Periodic azimuthal grids, angular modes and their OAM (Fourier-series)
// representation.
//
// Conventions:
//   grid point k sits at phi_k = -pi + k * 2pi/N,
//   <f|f> = integral |f(phi)|^2 dphi, evaluated as spacing * sum |f_k|^2,
//   a_l = (2pi)^{-1/2} integral f(phi) exp(-i l phi) dphi, l in [-N/2, N/2).
// With these choices the transform is unitary and Parseval holds with no
// extra factors.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "wva/error.hpp"

namespace wva {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Maximum tolerated probability mass at the grid seam, 2pi |f(seam)|^2 / <f|f>.
inline constexpr double kBoundaryLeakageLimit = 1e-6;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar angle) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  Scalar r = std::remainder(angle, 2 * pi);
  if (r <= -pi) r += 2 * pi;
  return r;
}

template <typename Scalar>
constexpr Scalar degrees_to_radians(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar radians_to_degrees(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

template <typename Scalar = double>
class AngularGrid {
 public:
  static constexpr std::size_t kDefaultSamples = 4096;
  static constexpr std::size_t kMinSamples = 64;

  explicit AngularGrid(std::size_t n_samples = kDefaultSamples) : n_(n_samples) {
    const bool power_of_two = n_ != 0 && (n_ & (n_ - 1)) == 0;
    if (n_ < kMinSamples || !power_of_two) {
      throw InvalidGrid("n_samples must be a power of two >= 64, got " +
                        std::to_string(n_));
    }
  }

  std::size_t size() const noexcept { return n_; }
  Scalar spacing() const noexcept {
    return 2 * std::numbers::pi_v<Scalar> / static_cast<Scalar>(n_);
  }
  Scalar angle(std::size_t k) const noexcept {
    return -std::numbers::pi_v<Scalar> + static_cast<Scalar>(k) * spacing();
  }
  RealVector<Scalar> angles() const {
    RealVector<Scalar> out(static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < n_; ++k) out(static_cast<Eigen::Index>(k)) = angle(k);
    return out;
  }

  /// Lowest OAM index representable on this grid.
  int ell_min() const noexcept { return -static_cast<int>(n_ / 2); }
  int ell_max() const noexcept { return static_cast<int>(n_ / 2) - 1; }

  friend bool operator==(const AngularGrid&, const AngularGrid&) = default;

 private:
  std::size_t n_;
};

/// Complex amplitude f(phi) sampled on an AngularGrid. Operations that are
/// unitary preserve the norm; normalized() rescales to <f|f> = 1.
template <typename Scalar = double>
class AngularWavefunction {
 public:
  AngularWavefunction(AngularGrid<Scalar> grid, ComplexVector<Scalar> amplitudes)
      : grid_(grid), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != grid_.size()) {
      throw GridMismatch("amplitude count does not match grid size");
    }
  }

  const AngularGrid<Scalar>& grid() const noexcept { return grid_; }
  const ComplexVector<Scalar>& amplitudes() const noexcept { return amplitudes_; }
  std::size_t size() const noexcept { return grid_.size(); }

  Scalar norm_squared() const { return grid_.spacing() * amplitudes_.squaredNorm(); }

  AngularWavefunction normalized() const {
    const Scalar n2 = norm_squared();
    if (!(n2 > 0)) throw GridMismatch("cannot normalize a zero wavefunction");
    return AngularWavefunction(grid_, amplitudes_ / std::sqrt(n2));
  }

  /// |f(phi_k)|^2 per radian.
  RealVector<Scalar> intensity() const { return amplitudes_.cwiseAbs2(); }

 private:
  AngularGrid<Scalar> grid_;
  ComplexVector<Scalar> amplitudes_;
};

/// Coefficients a_l for l = ell_min .. ell_min + size - 1.
template <typename Scalar = double>
class OAMSpectrum {
 public:
  OAMSpectrum(int ell_min, ComplexVector<Scalar> coefficients)
      : ell_min_(ell_min), coefficients_(std::move(coefficients)) {}

  int ell_min() const noexcept { return ell_min_; }
  int ell_max() const noexcept {
    return ell_min_ + static_cast<int>(coefficients_.size()) - 1;
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(coefficients_.size()); }
  bool contains(int ell) const noexcept { return ell >= ell_min() && ell <= ell_max(); }

  const ComplexVector<Scalar>& coefficients() const noexcept { return coefficients_; }

  std::complex<Scalar> coefficient(int ell) const {
    if (!contains(ell)) {
      throw EllOutOfRange("l = " + std::to_string(ell) + " outside [" +
                          std::to_string(ell_min()) + ", " + std::to_string(ell_max()) + "]");
    }
    return coefficients_(ell - ell_min_);
  }

  RealVector<Scalar> power() const { return coefficients_.cwiseAbs2(); }
  Scalar power(int ell) const { return std::norm(coefficient(ell)); }
  Scalar norm_squared() const { return coefficients_.squaredNorm(); }

  RealVector<Scalar> ells() const {
    return RealVector<Scalar>::LinSpaced(coefficients_.size(), Scalar(ell_min()),
                                         Scalar(ell_max()));
  }

 private:
  int ell_min_;
  ComplexVector<Scalar> coefficients_;
};

/// Gaussian-apodized angular slit parameters (radians).
template <typename Scalar = double>
struct ModeParams {
  Scalar eta_phi;
  Scalar center = 0;

  void validate() const {
    if (!(eta_phi > 0) || eta_phi > std::numbers::pi_v<Scalar> / 4) {
      throw WidthOutOfRange("eta_phi must lie in (0, pi/4], got " + std::to_string(eta_phi));
    }
    if (!std::isfinite(center)) throw WidthOutOfRange("mode center must be finite");
  }
};

/// Fraction of the norm sitting at the grid seam phi = +-pi.
template <typename Scalar>
Scalar boundary_leakage(const AngularWavefunction<Scalar>& psi) {
  constexpr Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  return two_pi * std::norm(psi.amplitudes()(0)) / psi.norm_squared();
}

template <typename Scalar>
AngularWavefunction<Scalar> make_angular_gaussian(const ModeParams<Scalar>& params,
                                                  const AngularGrid<Scalar>& grid) {
  params.validate();
  ComplexVector<Scalar> amps(static_cast<Eigen::Index>(grid.size()));
  const Scalar denom = 2 * params.eta_phi * params.eta_phi;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Scalar x = wrap_angle(grid.angle(k) - params.center);
    amps(static_cast<Eigen::Index>(k)) = std::exp(-x * x / denom);
  }
  auto psi = AngularWavefunction<Scalar>(grid, std::move(amps)).normalized();
  const Scalar leak = boundary_leakage(psi);
  if (leak > Scalar(kBoundaryLeakageLimit)) {
    throw BoundaryLeakage("mode has " + std::to_string(leak) + " of its norm at the seam");
  }
  return psi;
}

namespace detail {

inline int parity_sign(int ell) { return (ell % 2 == 0) ? 1 : -1; }

// Slot of OAM index l in an unshifted length-N DFT.
inline Eigen::Index dft_slot(int ell, std::size_t n) {
  const int ni = static_cast<int>(n);
  return static_cast<Eigen::Index>(((ell % ni) + ni) % ni);
}

}  // namespace detail

template <typename Scalar>
OAMSpectrum<Scalar> oam_transform(const AngularWavefunction<Scalar>& psi) {
  const std::size_t n = psi.size();
  Eigen::FFT<Scalar> fft;
  ComplexVector<Scalar> raw;
  fft.fwd(raw, psi.amplitudes());

  // phi_k = -pi + k*spacing turns exp(-i l phi_k) into (-1)^l times the DFT kernel.
  const Scalar scale = std::sqrt(2 * std::numbers::pi_v<Scalar>) / static_cast<Scalar>(n);
  const int ell_min = psi.grid().ell_min();
  ComplexVector<Scalar> coeffs(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const int ell = ell_min + static_cast<int>(j);
    coeffs(static_cast<Eigen::Index>(j)) =
        Scalar(detail::parity_sign(ell)) * scale * raw(detail::dft_slot(ell, n));
  }
  return OAMSpectrum<Scalar>(ell_min, std::move(coeffs));
}

template <typename Scalar>
AngularWavefunction<Scalar> inverse_oam_transform(const OAMSpectrum<Scalar>& spec,
                                                  const AngularGrid<Scalar>& grid) {
  const std::size_t n = grid.size();
  if (spec.size() != n || spec.ell_min() != grid.ell_min()) {
    throw GridMismatch("spectrum does not span the grid's OAM range");
  }
  ComplexVector<Scalar> raw(static_cast<Eigen::Index>(n));
  for (int ell = spec.ell_min(); ell <= spec.ell_max(); ++ell) {
    raw(detail::dft_slot(ell, n)) =
        Scalar(detail::parity_sign(ell)) * spec.coefficients()(ell - spec.ell_min());
  }
  Eigen::FFT<Scalar> fft;
  ComplexVector<Scalar> amps;
  fft.inv(amps, raw);  // includes 1/N
  amps *= static_cast<Scalar>(n) / std::sqrt(2 * std::numbers::pi_v<Scalar>);
  return AngularWavefunction<Scalar>(grid, std::move(amps));
}

/// True when a rotation is large enough that it should not be treated as a
/// small perturbation of the pointer.
template <typename Scalar>
bool exceeds_small_rotation(Scalar delta) {
  return std::abs(delta) >= std::numbers::pi_v<Scalar> / 2;
}

/// f(phi) -> f(phi - delta), applied as a_l -> a_l exp(-i l delta).
template <typename Scalar>
AngularWavefunction<Scalar> rotate(const AngularWavefunction<Scalar>& psi,
                                   std::type_identity_t<Scalar> delta) {
  if (delta == Scalar(0)) return psi;
  auto spec = oam_transform(psi);
  ComplexVector<Scalar> coeffs = spec.coefficients();
  for (int ell = spec.ell_min(); ell <= spec.ell_max(); ++ell) {
    coeffs(ell - spec.ell_min()) *= std::polar(Scalar(1), -Scalar(ell) * delta);
  }
  return inverse_oam_transform(OAMSpectrum<Scalar>(spec.ell_min(), std::move(coeffs)),
                               psi.grid());
}

/// Linear moments of a narrow intensity profile on the circle.
template <typename Scalar>
struct AngularMoments {
  Scalar centroid;
  Scalar width;
};

/// Intensity-weighted mean and standard deviation of phi. The branch cut is
/// moved opposite the circular mean so that a narrow profile is treated as a
/// line distribution wherever it sits.
template <typename Scalar>
AngularMoments<Scalar> intensity_moments(const AngularGrid<Scalar>& grid,
                                         const RealVector<Scalar>& intensity) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const std::size_t n = grid.size();
  if (static_cast<std::size_t>(intensity.size()) != n) {
    throw GridMismatch("intensity profile does not match grid size");
  }
  const Scalar total = intensity.sum();
  if (!(total > 0)) throw BoundaryLeakage("profile carries no intensity");

  std::complex<Scalar> first(0);
  for (std::size_t k = 0; k < n; ++k) {
    first += intensity(static_cast<Eigen::Index>(k)) * std::polar(Scalar(1), grid.angle(k));
  }
  const Scalar mean_dir = std::arg(first);

  // Intensity at the cut, taken as the larger of the two bracketing samples.
  const Scalar cut = wrap_angle(mean_dir + pi);
  const Scalar pos = (cut + pi) / grid.spacing();
  const auto lo = static_cast<std::size_t>(std::floor(pos)) % n;
  const auto hi = (lo + 1) % n;
  const Scalar at_cut = std::max(intensity(static_cast<Eigen::Index>(lo)),
                                 intensity(static_cast<Eigen::Index>(hi)));
  const Scalar leak = 2 * pi * at_cut / (grid.spacing() * total);
  if (leak > Scalar(kBoundaryLeakageLimit)) {
    throw BoundaryLeakage("centroid ill-defined: " + std::to_string(leak) +
                          " of the norm sits at the branch cut");
  }

  Scalar m1 = 0;
  Scalar m2 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Scalar x = wrap_angle(grid.angle(k) - mean_dir);
    const Scalar w = intensity(static_cast<Eigen::Index>(k));
    m1 += w * x;
    m2 += w * x * x;
  }
  m1 /= total;
  m2 /= total;
  return {wrap_angle(mean_dir + m1), std::sqrt(std::max(Scalar(0), m2 - m1 * m1))};
}

template <typename Scalar>
Scalar centroid_phi(const AngularWavefunction<Scalar>& psi) {
  return intensity_moments(psi.grid(), psi.intensity()).centroid;
}

template <typename Scalar>
Scalar width_phi(const AngularWavefunction<Scalar>& psi) {
  return intensity_moments(psi.grid(), psi.intensity()).width;
}

/// sum_l l |a_l|^2 / sum_l |a_l|^2
template <typename Scalar>
Scalar centroid_ell(const OAMSpectrum<Scalar>& spec) {
  const RealVector<Scalar> p = spec.power();
  return spec.ells().dot(p) / p.sum();
}

template <typename Scalar>
Scalar width_ell(const OAMSpectrum<Scalar>& spec) {
  const RealVector<Scalar> p = spec.power();
  const Scalar total = p.sum();
  const Scalar mean = spec.ells().dot(p) / total;
  const Scalar second = spec.ells().cwiseAbs2().dot(p) / total;
  return std::sqrt(std::max(Scalar(0), second - mean * mean));
}

/// <a|b> = integral conj(a) b dphi
template <typename Scalar>
std::complex<Scalar> inner_product(const AngularWavefunction<Scalar>& a,
                                   const AngularWavefunction<Scalar>& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("inner product across different grids");
  return a.grid().spacing() * a.amplitudes().dot(b.amplitudes());
}

/// The OAM operator -i d/dphi, applied spectrally.
template <typename Scalar>
AngularWavefunction<Scalar> apply_ell(const AngularWavefunction<Scalar>& psi) {
  auto spec = oam_transform(psi);
  ComplexVector<Scalar> coeffs = spec.coefficients().cwiseProduct(
      spec.ells().template cast<std::complex<Scalar>>());
  return inverse_oam_transform(OAMSpectrum<Scalar>(spec.ell_min(), std::move(coeffs)),
                               psi.grid());
}

/// Multiplication by the grid angle phi in [-pi, pi).
template <typename Scalar>
AngularWavefunction<Scalar> multiply_phi(const AngularWavefunction<Scalar>& psi) {
  ComplexVector<Scalar> amps =
      psi.amplitudes().cwiseProduct(psi.grid().angles().template cast<std::complex<Scalar>>());
  return AngularWavefunction<Scalar>(psi.grid(), std::move(amps));
}

}  // namespace wva
