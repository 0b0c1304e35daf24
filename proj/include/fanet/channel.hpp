#pragma once

#include <cmath>
#include <limits>

#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"

namespace fanet {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double to_db(double ratio) {
  return ratio > 0.0 ? 10.0 * std::log10(ratio) : -std::numeric_limits<double>::infinity();
}

/// Free-space line-of-sight link parameters.
struct ChannelParams {
  double carrier_hz = 28e9;
  double path_loss_exponent = 2.0;
  double bandwidth_hz = 100e6;
  double noise_psd_w_per_hz = dbm_to_watts(-174.0);
  double tx_power_w = 1.0;
  double max_distance_m = 100.0;

  [[nodiscard]] double wavelength() const { return kSpeedOfLight / carrier_hz; }
  [[nodiscard]] double noise_power_w() const { return noise_psd_w_per_hz * bandwidth_hz; }

  void validate() const {
    if (!(carrier_hz > 0.0) || !(path_loss_exponent > 0.0) || !(bandwidth_hz > 0.0) ||
        !(noise_psd_w_per_hz > 0.0) || !(tx_power_w > 0.0) || !(max_distance_m > 0.0))
      throw InvalidArgument("channel parameters must all be positive");
  }
};

/// Attenuation factor (c / (4 pi f0 d))^gamma; received = transmitted * factor.
inline double path_loss(double d, const ChannelParams &p) {
  if (!(d > 0.0))
    throw InvalidArgument("path loss needs a positive distance");
  return std::pow(kSpeedOfLight / (4.0 * kPi * p.carrier_hz * d), p.path_loss_exponent);
}

inline double received_power(double gain, double d, const ChannelParams &p) {
  if (gain < 0.0)
    throw InvalidArgument("gain must be nonnegative");
  return p.tx_power_w * gain * gain * path_loss(d, p);
}

/// Shannon capacity in bit/s under interference plus thermal noise.
inline double sinr_capacity(double signal_w, double interference_w, const ChannelParams &p) {
  if (signal_w < 0.0 || interference_w < 0.0)
    throw InvalidArgument("powers must be nonnegative");
  if (signal_w == 0.0)
    return 0.0;
  return p.bandwidth_hz * std::log2(1.0 + signal_w / (interference_w + p.noise_power_w()));
}

} // namespace fanet
