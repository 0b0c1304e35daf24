#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>


#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"
#include "fanet/random.hpp"
#include "fanet/uncertainty.hpp"

namespace fanet {

// ---------------------------------------------------------------------------
// Mobility

enum class MobilityModel { gauss_markov, random_waypoint };

struct MobilityParams {
  Vec3 box{200.0, 200.0, 10.0}; // m, origin at one corner
  double speed_min = 3.0;       // m/s
  double speed_max = 8.0;
  MobilityModel model = MobilityModel::gauss_markov;
  double update_interval = 0.1; // s
  double memory = 0.8;          // Gauss-Markov alpha per update interval
  double speed_sigma = 1.0;     // m/s
  double yaw_sigma = 0.3;       // rad
  double pitch_sigma = 0.1;     // rad
  double max_pitch = kPi / 4;

  void validate() const {
    if (!(box.minCoeff() > 0.0))
      throw InvalidArgument("map box must be positive");
    if (speed_min < 0.0 || speed_max < speed_min)
      throw InvalidArgument("speed range must be nonnegative and ordered");
    if (!(update_interval > 0.0))
      throw InvalidArgument("mobility update interval must be positive");
    if (memory < 0.0 || memory > 1.0)
      throw InvalidArgument("Gauss-Markov memory must lie in [0, 1]");
    if (speed_sigma < 0.0 || yaw_sigma < 0.0 || pitch_sigma < 0.0 || max_pitch < 0.0)
      throw InvalidArgument("mobility noise levels must be nonnegative");
  }
};

inline Vec3 velocity_from(double speed, double yaw, double pitch) {
  return speed * direction(Angles{yaw, pitch});
}

/// Reflects a position back into [0, box] and flips the matching velocity
/// component.
inline void reflect_into_box(UavState &s, const Vec3 &box) {
  for (int a = 0; a < 3; ++a) {
    double &p = s.position[a];
    double &v = s.velocity[a];
    if (p < 0.0) {
      p = -p;
      v = std::abs(v);
    } else if (p > box[a]) {
      p = 2.0 * box[a] - p;
      v = -std::abs(v);
    }
    p = std::clamp(p, 0.0, box[a]);
  }
}

/// Seeded swarm mobility. Gauss-Markov keeps no hidden state (speed and
/// heading live in the UavState); random waypoint remembers one waypoint
/// per UAV.
class SwarmMobility {
public:
  SwarmMobility(MobilityParams params, std::uint64_t seed) : params_(std::move(params)), rng_(seed) {
    params_.validate();
  }

  [[nodiscard]] const MobilityParams &params() const noexcept { return params_; }

  /// Advances every UAV by `dt` seconds, in sub-steps no longer than the
  /// configured update interval.
  void step(std::vector<UavState> &states, double dt) {
    if (!(dt > 0.0))
      throw InvalidArgument("time step must be positive");
    const auto n = static_cast<std::size_t>(std::ceil(dt / params_.update_interval - 1e-9));
    const double h = dt / static_cast<double>(std::max<std::size_t>(n, 1));
    for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k)
      for (auto &s : states)
        params_.model == MobilityModel::gauss_markov ? step_gauss_markov(s, h) : step_waypoint(s, h);
  }

private:
  void step_gauss_markov(UavState &s, double h) {
    // Memory is specified per update interval; rescale for shorter sub-steps.
    const double alpha = std::pow(params_.memory, h / params_.update_interval);
    const double spread = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
    const double mean_speed = 0.5 * (params_.speed_min + params_.speed_max);

    double speed = s.velocity.norm();
    double yaw = s.attitude.yaw;
    double pitch = s.attitude.pitch;
    speed = alpha * speed + (1.0 - alpha) * mean_speed + spread * params_.speed_sigma * normal_(rng_);
    speed = std::clamp(speed, params_.speed_min, params_.speed_max);
    yaw = wrap_angle(yaw + spread * params_.yaw_sigma * normal_(rng_));
    pitch = alpha * pitch + spread * params_.pitch_sigma * normal_(rng_);
    pitch = std::clamp(pitch, -params_.max_pitch, params_.max_pitch);

    s.velocity = velocity_from(speed, yaw, pitch);
    s.position += h * s.velocity;
    reflect_into_box(s, params_.box);
    s.attitude = speed > 0.0 ? heading_of(s.velocity, s.attitude) : Attitude{yaw, pitch};
  }

  void step_waypoint(UavState &s, double h) {
    if (waypoints_.size() <= s.id)
      waypoints_.resize(s.id + 1);
    auto &wp = waypoints_[s.id];
    if (!wp || distance(wp->target, s.position) < 1e-6)
      wp = Waypoint{random_point(), uniform(params_.speed_min, params_.speed_max)};
    const Vec3 to_go = wp->target - s.position;
    const double left = to_go.norm();
    const double travel = wp->speed * h;
    if (wp->speed == 0.0) {
      s.velocity.setZero();
      return;
    }
    s.velocity = wp->speed * to_go / left;
    s.position = travel >= left ? wp->target : Vec3(s.position + travel * to_go / left);
    s.attitude = heading_of(s.velocity, s.attitude);
  }

  Vec3 random_point() {
    return {uniform(0.0, params_.box.x()), uniform(0.0, params_.box.y()), uniform(0.0, params_.box.z())};
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  struct Waypoint {
    Vec3 target;
    double speed;
  };

  MobilityParams params_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<std::optional<Waypoint>> waypoints_;
};

/// One-shot step of a fresh mobility model.
inline std::vector<UavState> step_mobility(std::vector<UavState> states, const MobilityParams &params,
                                           double dt, std::uint64_t seed) {
  SwarmMobility mobility(params, seed);
  mobility.step(states, dt);
  return states;
}

// ---------------------------------------------------------------------------
// Unscented Kalman filter

struct UkfParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
};

/// Sigma-point filter for an N-dimensional state observed through a
/// Z-dimensional measurement. Process and measurement models are callables
/// supplied per step.
template <int N, int Z>
class UnscentedKalmanFilter {
public:
  using State = Eigen::Matrix<double, N, 1>;
  using StateCov = Eigen::Matrix<double, N, N>;
  using Meas = Eigen::Matrix<double, Z, 1>;
  using MeasCov = Eigen::Matrix<double, Z, Z>;

  UnscentedKalmanFilter(State x, StateCov p, UkfParams params = {})
      : x_(std::move(x)), p_(std::move(p)), params_(params) {
    const double n = N;
    lambda_ = params_.alpha * params_.alpha * (n + params_.kappa) - n;
    if (!(n + lambda_ > 0.0))
      throw InvalidArgument("UKF spread parameters give a nonpositive scaling");
    wm0_ = lambda_ / (n + lambda_);
    wc0_ = wm0_ + (1.0 - params_.alpha * params_.alpha + params_.beta);
    wi_ = 1.0 / (2.0 * (n + lambda_));
  }

  [[nodiscard]] const State &state() const noexcept { return x_; }
  [[nodiscard]] const StateCov &covariance() const noexcept { return p_; }
  [[nodiscard]] const UkfParams &params() const noexcept { return params_; }

  /// Mean weights; they sum to one.
  [[nodiscard]] double mean_weight(int i) const { return i == 0 ? wm0_ : wi_; }
  [[nodiscard]] double cov_weight(int i) const { return i == 0 ? wc0_ : wi_; }

  template <typename F>
  void predict(F &&f, const StateCov &q) {
    const auto sigma = sigma_points();
    std::array<State, 2 * N + 1> y;
    for (int i = 0; i < 2 * N + 1; ++i)
      y[i] = f(sigma[i]);
    const State mean = weighted_mean<N>(y);
    StateCov cov = q;
    for (int i = 0; i < 2 * N + 1; ++i) {
      const State d = y[i] - mean;
      cov += cov_weight(i) * d * d.transpose();
    }
    x_ = mean;
    p_ = 0.5 * (cov + cov.transpose());
  }

  template <typename H>
  void update(H &&h, const Meas &z, const MeasCov &r) {
    const auto sigma = sigma_points();
    std::array<Meas, 2 * N + 1> zs;
    for (int i = 0; i < 2 * N + 1; ++i)
      zs[i] = h(sigma[i]);
    const Meas z_hat = weighted_mean<Z>(zs);
    MeasCov s = r;
    Eigen::Matrix<double, N, Z> cross = Eigen::Matrix<double, N, Z>::Zero();
    for (int i = 0; i < 2 * N + 1; ++i) {
      const Meas dz = zs[i] - z_hat;
      s += cov_weight(i) * dz * dz.transpose();
      cross += cov_weight(i) * (sigma[i] - x_) * dz.transpose();
    }
    const Eigen::Matrix<double, N, Z> gain = s.ldlt().solve(cross.transpose()).transpose();
    x_ += gain * (z - z_hat);
    StateCov p = p_ - gain * s * gain.transpose();
    p_ = 0.5 * (p + p.transpose());
    if (!p_.allFinite())
      throw NotPositiveSemiDefinite("UKF covariance diverged");
    Eigen::SelfAdjointEigenSolver<StateCov> eig(p_, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, p_.diagonal().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -kPsdTolerance * scale)
      throw NotPositiveSemiDefinite("UKF covariance lost positive semi-definiteness");
  }

private:
  std::array<State, 2 * N + 1> sigma_points() const {
    const StateCov scaled = (static_cast<double>(N) + lambda_) * p_;
    StateCov root;
    Eigen::LLT<StateCov> llt(scaled);
    if (llt.info() == Eigen::Success) {
      root = llt.matrixL();
    } else {
      Eigen::SelfAdjointEigenSolver<StateCov> eig(scaled);
      root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
             eig.eigenvectors().transpose();
    }
    std::array<State, 2 * N + 1> pts;
    pts[0] = x_;
    for (int i = 0; i < N; ++i) {
      pts[1 + i] = x_ + root.col(i);
      pts[1 + N + i] = x_ - root.col(i);
    }
    return pts;
  }

  // Accumulates offsets from the centre point: the central weight is large
  // and negative for small alpha, and summing raw points would cancel badly.
  template <int D>
  Eigen::Matrix<double, D, 1> weighted_mean(const std::array<Eigen::Matrix<double, D, 1>, 2 * N + 1> &pts) const {
    Eigen::Matrix<double, D, 1> acc = Eigen::Matrix<double, D, 1>::Zero();
    for (int i = 1; i < 2 * N + 1; ++i)
      acc += wi_ * (pts[i] - pts[0]);
    return pts[0] + acc;
  }

  State x_;
  StateCov p_;
  UkfParams params_;
  double lambda_ = 0.0;
  double wm0_ = 0.0;
  double wc0_ = 0.0;
  double wi_ = 0.0;
};

struct TrackerParams {
  UkfParams ukf;
  double process_noise = 4.0;       // white-acceleration PSD q, m^2/s^3
  double measurement_noise = 0.1;   // position sigma r, m
  double measurement_interval = 1.0; // s
  double initial_velocity_sigma = 5.0;
  double along_track_ratio = 4.0; // process noise along the estimated heading, relative to across it

  void validate() const {
    if (process_noise < 0.0 || measurement_noise < 0.0 || initial_velocity_sigma < 0.0)
      throw InvalidArgument("tracker noise levels must be nonnegative");
    if (!(along_track_ratio > 0.0))
      throw InvalidArgument("along-track noise ratio must be positive");
    if (!(measurement_interval > 0.0))
      throw InvalidArgument("measurement interval must be positive");
  }
};

using CvState = Eigen::Matrix<double, 6, 1>;
using CvCov = Eigen::Matrix<double, 6, 6>;

/// Discrete process noise of the constant-velocity model driven by white
/// acceleration with density matrix q (m^2/s^3). State order: x y z vx vy vz.
inline CvCov constant_velocity_process_noise(const Mat3 &q, double dt) {
  CvCov out = CvCov::Zero();
  const double dt2 = dt * dt;
  out.topLeftCorner<3, 3>() = q * (dt2 * dt / 3.0);
  out.topRightCorner<3, 3>() = q * (dt2 / 2.0);
  out.bottomLeftCorner<3, 3>() = q * (dt2 / 2.0);
  out.bottomRightCorner<3, 3>() = q * dt;
  return out;
}

/// Isotropic spectral density q.
inline CvCov constant_velocity_process_noise(double q, double dt) {
  return constant_velocity_process_noise(Mat3(q * Mat3::Identity()), dt);
}

/// Acceleration density q across the heading and ratio * q along it.
inline Mat3 heading_aligned_noise(double q, double ratio, const Vec3 &velocity) {
  const double speed = velocity.norm();
  if (speed == 0.0 || ratio == 1.0)
    return q * Mat3::Identity();
  const Vec3 u = velocity / speed;
  return q * (Mat3::Identity() + (ratio - 1.0) * u * u.transpose());
}

inline CvState constant_velocity_step(const CvState &s, double dt) {
  CvState out = s;
  out.head<3>() += dt * s.tail<3>();
  return out;
}

/// Per-UAV constant-velocity UKF fed with noisy position fixes.
class PositionTracker {
public:
  PositionTracker(const Vec3 &first_fix, TrackerParams params, Attitude attitude = {})
      : params_(std::move(params)), filter_(initial_state(first_fix), initial_cov(params_), params_.ukf),
        attitude_(attitude) {
    params_.validate();
  }

  [[nodiscard]] const TrackerParams &params() const noexcept { return params_; }
  [[nodiscard]] const CvState &state() const noexcept { return filter_.state(); }
  [[nodiscard]] const CvCov &covariance() const noexcept { return filter_.covariance(); }
  [[nodiscard]] const UnscentedKalmanFilter<6, 3> &filter() const noexcept { return filter_; }

  void predict(double dt) {
    if (!(dt > 0.0))
      throw InvalidArgument("prediction interval must be positive");
    const Mat3 q = heading_aligned_noise(params_.process_noise, params_.along_track_ratio,
                                         filter_.state().tail<3>());
    filter_.predict([dt](const CvState &s) { return constant_velocity_step(s, dt); },
                    constant_velocity_process_noise(q, dt));
  }

  void update(const Vec3 &fix) {
    if (!fix.allFinite())
      throw InvalidArgument("measurement must be finite");
    const double r2 = params_.measurement_noise * params_.measurement_noise;
    filter_.update([](const CvState &s) -> Vec3 { return s.head<3>(); }, fix, r2 * Mat3::Identity());
    attitude_ = heading_of(filter_.state().tail<3>(), attitude_);
  }

  [[nodiscard]] Attitude attitude() const noexcept { return attitude_; }

  /// Position block of the state and its 3x3 covariance.
  [[nodiscard]] PositionEstimate estimate() const {
    const Mat3 cov = filter_.covariance().topLeftCorner<3, 3>();
    return {filter_.state().head<3>(), 0.5 * (cov + cov.transpose()), attitude_};
  }

private:
  static CvState initial_state(const Vec3 &fix) {
    CvState s = CvState::Zero();
    s.head<3>() = fix;
    return s;
  }
  static CvCov initial_cov(const TrackerParams &p) {
    CvCov c = CvCov::Zero();
    const double r2 = std::max(p.measurement_noise * p.measurement_noise, 1e-12);
    const double v2 = p.initial_velocity_sigma * p.initial_velocity_sigma;
    for (int a = 0; a < 3; ++a) {
      c(a, a) = r2;
      c(a + 3, a + 3) = v2;
    }
    return c;
  }

  TrackerParams params_;
  UnscentedKalmanFilter<6, 3> filter_;
  Attitude attitude_;
};

/// One predict/update cycle; returns the emitted belief.
inline PositionEstimate ukf_predict_update(PositionTracker &tracker, const Vec3 &fix, double dt) {
  tracker.predict(dt);
  tracker.update(fix);
  return tracker.estimate();
}

/// Yaw/pitch of the tracked velocity; keeps `previous` when it is zero.
inline Attitude attitude_estimate(const PositionTracker &tracker, const Attitude &previous = {}) {
  return heading_of(tracker.state().tail<3>(), previous);
}

/// Controller-side tracking of a whole swarm.
class SwarmTracker {
public:
  SwarmTracker(const std::vector<UavState> &truth, TrackerParams params, std::uint64_t seed)
      : params_(std::move(params)), rng_(seed) {
    params_.validate();
    trackers_.reserve(truth.size());
    for (const auto &s : truth)
      trackers_.emplace_back(noisy_fix(s.position), params_, s.attitude);
  }

  [[nodiscard]] std::size_t size() const noexcept { return trackers_.size(); }
  [[nodiscard]] const PositionTracker &tracker(std::size_t k) const { return trackers_.at(k); }

  /// Predicts every filter by `dt` and fuses a fresh noisy fix of the truth.
  void observe(const std::vector<UavState> &truth, double dt) {
    for (std::size_t k = 0; k < trackers_.size(); ++k) {
      trackers_[k].predict(dt);
      trackers_[k].update(noisy_fix(truth[k].position));
    }
  }

  /// Belief at the last update. With `exact_attitude` the reported attitudes
  /// come from `truth` instead of the tracked velocities.
  [[nodiscard]] SwarmBelief belief(double timestamp, const std::vector<UavState> *truth = nullptr) const {
    SwarmBelief b;
    b.timestamp = timestamp;
    b.estimates.reserve(trackers_.size());
    for (std::size_t k = 0; k < trackers_.size(); ++k) {
      auto e = trackers_[k].estimate();
      if (truth)
        e.attitude = (*truth)[k].attitude;
      b.estimates.push_back(std::move(e));
    }
    return b;
  }

private:
  Vec3 noisy_fix(const Vec3 &p) {
    const double r = params_.measurement_noise;
    return p + Vec3(r * normal_(rng_), r * normal_(rng_), r * normal_(rng_));
  }

  TrackerParams params_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<PositionTracker> trackers_;
};

/// CSV trace: time, uav, true xyz, estimated xyz, covariance diagonal.
inline void write_trace_header(std::ostream &os) {
  os << "time,uav,true_x,true_y,true_z,est_x,est_y,est_z,var_x,var_y,var_z\n";
}

inline void write_trace_rows(std::ostream &os, double time, const std::vector<UavState> &truth,
                             const SwarmBelief &belief) {
  const auto old = os.precision(9);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto &t = truth[k].position;
    const auto &e = belief.estimates.at(k);
    os << time << ',' << k << ',' << t.x() << ',' << t.y() << ',' << t.z() << ',' << e.mean.x() << ','
       << e.mean.y() << ',' << e.mean.z() << ',' << e.covariance(0, 0) << ',' << e.covariance(1, 1) << ','
       << e.covariance(2, 2) << '\n';
  }
  os.precision(old);
}

} // namespace fanet
