#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include <Eigen/Core>

#include "fanet/errors.hpp"

namespace fanet {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

/// Yaw in [-pi, pi), pitch in [-pi/2, pi/2], radians.
struct Attitude {
  double yaw = 0.0;
  double pitch = 0.0;
};

struct UavState {
  std::size_t id = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero(); // m/s
  Attitude attitude;
};

/// Azimuth/elevation pair in radians.
struct Angles {
  double azimuth = 0.0;
  double elevation = 0.0;
};

inline double distance(const Vec3 &a, const Vec3 &b) { return (a - b).norm(); }

/// Heaviside step with step(0) == 0.
inline double step(double x) { return x > 0.0 ? 1.0 : 0.0; }

/// Reduces an angle into [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0)
    r += 2.0 * kPi;
  r -= kPi;
  // fmod can round up to exactly +pi for inputs just below an odd multiple.
  return r >= kPi ? -kPi : r;
}

/// Folds an elevation into [-pi/2, pi/2] by reflection about +-pi/2,
/// keeping its sine. The azimuth is left alone.
inline double reflect_elevation(double e) {
  e = wrap_angle(e);
  if (e > kPi / 2)
    return kPi - e;
  if (e < -kPi / 2)
    return -kPi - e;
  return e;
}

/// Canonical form of a direction: elevation in [-pi/2, pi/2], azimuth in
/// [-pi, pi). An elevation past the pole is folded back and the azimuth
/// turned by pi, so the pointed-at direction is unchanged.
inline Angles canonical_direction(Angles a) {
  double e = wrap_angle(a.elevation);
  double az = a.azimuth;
  if (e > kPi / 2) {
    e = kPi - e;
    az += kPi;
  } else if (e < -kPi / 2) {
    e = -kPi - e;
    az += kPi;
  }
  return {wrap_angle(az), e};
}

/// Bearing of `rx` seen from `tx`, in the body frame given by the
/// transmitter's attitude (yaw and pitch subtracted).
inline Angles relative_angles(const Vec3 &tx, const Attitude &att, const Vec3 &rx) {
  const Vec3 d = rx - tx;
  const double horizontal = std::hypot(d.x(), d.y());
  if (horizontal == 0.0 && d.z() == 0.0)
    throw CoincidentPointsError();
  // atan2 resolves all four quadrants of pi*step(dx) + atan(dy/dx).
  const double az = std::atan2(d.y(), d.x());
  const double el = std::atan2(d.z(), horizontal);
  return canonical_direction({az - att.yaw, el - att.pitch});
}

/// Angles used on the receive side of a link whose transmit-side angles
/// are `a`: (pi + azimuth, pi + elevation), each reduced on its own. The
/// result points along the reversed link direction.
inline Angles reciprocal_angles(const Angles &a) {
  return {wrap_angle(kPi + a.azimuth), reflect_elevation(kPi + a.elevation)};
}

/// Unit vector for a canonical (azimuth, elevation) pair.
inline Vec3 direction(const Angles &a) {
  const double ce = std::cos(a.elevation);
  return {ce * std::cos(a.azimuth), ce * std::sin(a.azimuth), std::sin(a.elevation)};
}

/// Yaw and pitch of a velocity vector. Falls back to `previous` at rest.
inline Attitude heading_of(const Vec3 &velocity, const Attitude &previous = {}) {
  const double horizontal = std::hypot(velocity.x(), velocity.y());
  if (horizontal == 0.0 && velocity.z() == 0.0)
    return previous;
  return {wrap_angle(std::atan2(velocity.y(), velocity.x())),
          std::atan2(velocity.z(), horizontal)};
}

} // namespace fanet
