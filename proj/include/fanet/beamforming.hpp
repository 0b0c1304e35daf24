#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"

namespace fanet {

using Complex = std::complex<double>;

/// Uniform planar array in the body y-z plane, boresight along +x.
/// Spacings are in wavelengths.
struct UpaConfig {
  std::size_t m_h = 1;
  std::size_t m_v = 1;
  double d_h = 0.5;
  double d_v = 0.5;
  double wavelength = 299792458.0 / 28e9;

  [[nodiscard]] std::size_t elements() const noexcept { return m_h * m_v; }

  void validate() const {
    if (m_h < 1 || m_v < 1)
      throw InvalidArgument("UPA needs at least one element per axis");
    if (!(d_h > 0.0) || !(d_v > 0.0) || !(wavelength > 0.0))
      throw InvalidArgument("UPA spacing and wavelength must be positive");
  }
};

/// Near-square array with `m` elements; the horizontal side is the larger
/// one (8 -> 4x2, 32 -> 8x4).
inline UpaConfig upa_for_elements(std::size_t m, double wavelength = 299792458.0 / 28e9) {
  if (m < 1)
    throw InvalidArgument("array needs at least one element");
  std::size_t m_v = 1;
  for (std::size_t k = 1; k * k <= m; ++k)
    if (m % k == 0)
      m_v = k;
  return UpaConfig{m / m_v, m_v, 0.5, 0.5, wavelength};
}

/// Horizontal index i(l) and vertical index j(l) of the 1-based element l.
/// Element l sits at column-stacked offset l-1 = i + j*m_h.
struct ElementIndex {
  std::size_t i;
  std::size_t j;
};

inline ElementIndex element_index(std::size_t l, const UpaConfig &cfg) {
  if (l < 1 || l > cfg.elements())
    throw InvalidArgument("element index " + std::to_string(l) + " outside 1.." +
                          std::to_string(cfg.elements()));
  return {(l - 1) % cfg.m_h, (l - 1) / cfg.m_h};
}

inline Vec3 element_position(std::size_t l, const UpaConfig &cfg) {
  const auto [i, j] = element_index(l, cfg);
  return {0.0, static_cast<double>(i) * cfg.d_h * cfg.wavelength,
          static_cast<double>(j) * cfg.d_v * cfg.wavelength};
}

inline Vec3 wave_vector(const Angles &a, double wavelength) {
  return (2.0 * kPi / wavelength) * direction(a);
}

/// a(phi, theta): entry m is exp(j * kappa . u_m).
inline std::vector<Complex> steering_vector(const Angles &a, const UpaConfig &cfg) {
  const Vec3 k = wave_vector(a, cfg.wavelength);
  std::vector<Complex> out(cfg.elements());
  for (std::size_t l = 1; l <= cfg.elements(); ++l)
    out[l - 1] = std::polar(1.0, k.dot(element_position(l, cfg)));
  return out;
}

/// Binary element-activation mask W (m_h x m_v), stored column-stacked.
class BeamPattern {
public:
  /// Single active element.
  BeamPattern() : BeamPattern(1, 1, {1}) {}

  BeamPattern(std::size_t m_h, std::size_t m_v, std::vector<std::uint8_t> stacked)
      : m_h_(m_h), m_v_(m_v), stacked_(std::move(stacked)) {
    if (stacked_.size() != m_h_ * m_v_)
      throw InvalidArgument("beam mask size does not match array");
    active_ = static_cast<std::size_t>(
        std::count_if(stacked_.begin(), stacked_.end(), [](auto v) { return v != 0; }));
    if (active_ == 0)
      throw InvalidArgument("beam mask has no active element");
    for (auto &v : stacked_)
      v = v != 0 ? 1 : 0;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return m_h_; }
  [[nodiscard]] std::size_t cols() const noexcept { return m_v_; }
  [[nodiscard]] bool active(std::size_t i, std::size_t j) const { return stacked_.at(i + j * m_h_) != 0; }
  [[nodiscard]] const std::vector<std::uint8_t> &stacked() const noexcept { return stacked_; }
  [[nodiscard]] std::size_t active_count() const noexcept { return active_; }

  void check_fits(const UpaConfig &cfg) const {
    if (cfg.m_h != m_h_ || cfg.m_v != m_v_)
      throw InvalidArgument("beam mask dimensions do not match the array");
  }

private:
  std::size_t m_h_;
  std::size_t m_v_;
  std::vector<std::uint8_t> stacked_;
  std::size_t active_;
};

/// Leading `active_rows` x `active_cols` block switched on. A 1x1 block is
/// the omnidirectional single-element beam, the full block the narrowest.
inline BeamPattern make_beam(const UpaConfig &cfg, std::size_t active_cols, std::size_t active_rows) {
  cfg.validate();
  if (active_rows < 1 || active_cols < 1)
    throw InvalidArgument("beam needs at least one active element");
  if (active_rows > cfg.m_h || active_cols > cfg.m_v)
    throw InvalidArgument("active block larger than the array");
  std::vector<std::uint8_t> mask(cfg.elements(), 0);
  for (std::size_t j = 0; j < active_cols; ++j)
    for (std::size_t i = 0; i < active_rows; ++i)
      mask[i + j * cfg.m_h] = 1;
  return BeamPattern(cfg.m_h, cfg.m_v, std::move(mask));
}

inline BeamPattern full_beam(const UpaConfig &cfg) { return make_beam(cfg, cfg.m_v, cfg.m_h); }

namespace detail {

// Per-element phase of a(phi, theta) is alpha*i + beta*j.
struct PhaseSlopes {
  double alpha;
  double beta;
};

inline PhaseSlopes phase_slopes(const Angles &a, const UpaConfig &cfg) {
  const double ce = std::cos(a.elevation);
  return {2.0 * kPi * cfg.d_h * ce * std::sin(a.azimuth), 2.0 * kPi * cfg.d_v * std::sin(a.elevation)};
}

// |sum over active (i, j) of exp(j(alpha*i + beta*j))|
inline double masked_phasor_sum(const BeamPattern &beam, double alpha, double beta) {
  constexpr std::size_t kInline = 64;
  std::array<Complex, kInline> inline_rows;
  std::vector<Complex> heap_rows;
  Complex *row = inline_rows.data();
  if (beam.rows() > kInline) {
    heap_rows.resize(beam.rows());
    row = heap_rows.data();
  }
  // Powers of e^{j alpha} by recurrence; drift stays near machine epsilon
  // for the array sizes used here.
  const Complex row_step = std::polar(1.0, alpha);
  row[0] = {1.0, 0.0};
  for (std::size_t i = 1; i < beam.rows(); ++i)
    row[i] = row[i - 1] * row_step;

  const auto &mask = beam.stacked();
  const Complex col_step = std::polar(1.0, beta);
  Complex col_phase{1.0, 0.0};
  Complex total{0.0, 0.0};
  for (std::size_t j = 0; j < beam.cols(); ++j) {
    Complex partial{0.0, 0.0};
    const std::uint8_t *col_mask = mask.data() + j * beam.rows();
    for (std::size_t i = 0; i < beam.rows(); ++i)
      if (col_mask[i] != 0)
        partial += row[i];
    total += partial * col_phase;
    col_phase *= col_step;
  }
  return std::abs(total);
}

} // namespace detail

/// Beam whose phases are steered at `aim`: w = a(aim) (.) mask.
struct SteeredBeam {
  BeamPattern pattern;
  Angles aim;
};

/// |a(angles)^H w| for the unsteered binary weight vector w = stacked mask.
inline double array_response(const Angles &angles, const BeamPattern &beam, const UpaConfig &cfg) {
  beam.check_fits(cfg);
  const auto s = detail::phase_slopes(angles, cfg);
  return detail::masked_phasor_sum(beam, -s.alpha, -s.beta);
}

/// |a(actual)^H (a(aim) (.) mask)| without building the weight vector.
inline double steered_response(const Angles &actual, const BeamPattern &pattern, const Angles &aim,
                               const UpaConfig &cfg) {
  pattern.check_fits(cfg);
  const auto s = detail::phase_slopes(actual, cfg);
  const auto t = detail::phase_slopes(aim, cfg);
  return detail::masked_phasor_sum(pattern, t.alpha - s.alpha, t.beta - s.beta);
}

/// |a(angles)^H w| for a steered beam.
inline double array_response(const Angles &angles, const SteeredBeam &beam, const UpaConfig &cfg) {
  return steered_response(angles, beam.pattern, beam.aim, cfg);
}

/// Realized gain g = h_Rx * h_Tx / (M_H * M_V). Each response is evaluated
/// at the actual angles; the beams carry the angles they were aimed with.
template <typename Beam>
double link_gain(const Angles &tx_angles, const Angles &rx_angles, const Beam &tx_beam,
                 const Beam &rx_beam, const UpaConfig &cfg) {
  const double h_tx = array_response(tx_angles, tx_beam, cfg);
  const double h_rx = array_response(rx_angles, rx_beam, cfg);
  return h_rx * h_tx / static_cast<double>(cfg.elements());
}

namespace detail {
inline std::size_t active_of(const BeamPattern &b) { return b.active_count(); }
inline std::size_t active_of(const SteeredBeam &b) { return b.pattern.active_count(); }
} // namespace detail

/// Link gain divided by its peak value, so 1 means perfect alignment for any
/// array size. This keeps the radiated power fixed across configurations.
template <typename Beam>
double normalized_link_gain(const Angles &tx_angles, const Angles &rx_angles, const Beam &tx_beam,
                            const Beam &rx_beam, const UpaConfig &cfg) {
  const double h_tx = array_response(tx_angles, tx_beam, cfg);
  const double h_rx = array_response(rx_angles, rx_beam, cfg);
  return h_rx * h_tx /
         static_cast<double>(detail::active_of(tx_beam) * detail::active_of(rx_beam));
}

} // namespace fanet
