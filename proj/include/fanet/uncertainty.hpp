#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"
#include "fanet/random.hpp"

namespace fanet {

using Mat3 = Eigen::Matrix3d;

/// Controller belief about one UAV: x_hat = x + n with n ~ N(0, covariance).
struct PositionEstimate {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Zero(); // m^2
  Attitude attitude;
  double attitude_sigma = 0.0; // rad, independent on yaw and pitch
};

struct SwarmBelief {
  std::vector<PositionEstimate> estimates; // indexed by UAV id
  double timestamp = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return estimates.size(); }

  [[nodiscard]] bool degenerate() const {
    return std::all_of(estimates.begin(), estimates.end(), [](const PositionEstimate &e) {
      return e.covariance.isZero(0.0) && e.attitude_sigma == 0.0;
    });
  }
};

/// Belief that puts all mass on the given positions.
inline SwarmBelief exact_belief(const std::vector<UavState> &states, double timestamp = 0.0) {
  SwarmBelief b;
  b.timestamp = timestamp;
  b.estimates.reserve(states.size());
  for (const auto &s : states)
    b.estimates.push_back({s.position, Mat3::Zero(), s.attitude});
  return b;
}

inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kCholeskyJitter = 1e-12;

inline void check_psd(const Mat3 &cov, const std::string &what = "covariance") {
  if (!cov.allFinite())
    throw NotPositiveSemiDefinite(what + " has non-finite entries");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance)
    throw NotPositiveSemiDefinite(what + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kPsdTolerance)
    throw NotPositiveSemiDefinite(what + " has a negative eigenvalue");
}

/// Lower-triangular L with L L^T = cov. A zero matrix gives a zero factor;
/// near-singular matrices get a small diagonal jitter.
inline Mat3 covariance_factor(const Mat3 &cov) {
  check_psd(cov);
  if (cov.isZero(0.0))
    return Mat3::Zero();
  const Mat3 sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Mat3> llt(sym);
  if (llt.info() == Eigen::Success)
    return llt.matrixL();
  llt.compute(sym + kCholeskyJitter * Mat3::Identity());
  if (llt.info() == Eigen::Success)
    return llt.matrixL();
  // Semi-definite beyond the jitter: fall back to the symmetric square root.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
  const Eigen::Vector3d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Draws whole-swarm position realizations from a belief.
class SwarmSampler {
public:
  explicit SwarmSampler(const SwarmBelief &belief) {
    means_.reserve(belief.size());
    factors_.reserve(belief.size());
    for (std::size_t k = 0; k < belief.size(); ++k) {
      const auto &e = belief.estimates[k];
      try {
        factors_.push_back(covariance_factor(e.covariance));
      } catch (const NotPositiveSemiDefinite &err) {
        throw NotPositiveSemiDefinite("UAV " + std::to_string(k) + ": " + err.what());
      }
      if (!(e.attitude_sigma >= 0.0))
        throw InvalidArgument("UAV " + std::to_string(k) + ": attitude sigma must be nonnegative");
      means_.push_back(e.mean);
      attitudes_.push_back(e.attitude);
      attitude_sigmas_.push_back(e.attitude_sigma);
      random_attitude_ = random_attitude_ || e.attitude_sigma > 0.0;
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return means_.size(); }

  void draw(Rng &rng, std::vector<Vec3> &out) const {
    std::normal_distribution<double> normal(0.0, 1.0);
    out.resize(means_.size());
    for (std::size_t k = 0; k < means_.size(); ++k) {
      const Vec3 z(normal(rng), normal(rng), normal(rng));
      out[k] = means_[k] + factors_[k] * z;
    }
  }

  /// Positions as above, then attitudes (estimate plus Gaussian yaw/pitch
  /// error) when any UAV carries attitude uncertainty.
  void draw(Rng &rng, std::vector<Vec3> &positions, std::vector<Attitude> &attitudes) const {
    draw(rng, positions);
    attitudes = attitudes_;
    if (!random_attitude_)
      return;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < attitudes.size(); ++k) {
      const double yaw = normal(rng), pitch = normal(rng);
      attitudes[k].yaw = wrap_angle(attitudes[k].yaw + attitude_sigmas_[k] * yaw);
      attitudes[k].pitch += attitude_sigmas_[k] * pitch;
    }
  }

private:
  std::vector<Vec3> means_;
  std::vector<Mat3> factors_;
  std::vector<Attitude> attitudes_;
  std::vector<double> attitude_sigmas_;
  bool random_attitude_ = false;
};

/// One true-position draw per UAV, independent across UAVs.
inline std::vector<Vec3> sample_swarm(const SwarmBelief &belief, std::uint64_t seed) {
  SwarmSampler sampler(belief);
  Rng rng(seed);
  std::vector<Vec3> out;
  sampler.draw(rng, out);
  return out;
}

struct ProbabilityEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo estimate of P(|x_i - x_j| <= range) under the belief, i.e. the
/// mass of N(x_hat_i - x_hat_j, cov_i + cov_j) inside the ball of radius
/// `range`. The pair is ordered internally so P(i, j) == P(j, i) for a seed.
inline ProbabilityEstimate link_existence_probability(const SwarmBelief &belief, std::size_t i,
                                                      std::size_t j, double range,
                                                      std::size_t samples, std::uint64_t seed) {
  if (i >= belief.size() || j >= belief.size())
    throw InvalidArgument("UAV id out of range");
  if (i == j)
    throw InvalidArgument("link endpoints must differ");
  if (!(range > 0.0))
    throw InvalidArgument("range must be positive");
  if (samples < 1)
    throw InvalidArgument("need at least one sample");
  if (i > j)
    std::swap(i, j);

  const auto &a = belief.estimates[i];
  const auto &b = belief.estimates[j];
  const Vec3 offset = a.mean - b.mean;
  const Mat3 factor = covariance_factor(a.covariance + b.covariance);

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t inside = 0;
  const double r2 = range * range;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vec3 z(normal(rng), normal(rng), normal(rng));
    if ((offset + factor * z).squaredNorm() <= r2)
      ++inside;
  }
  const double p = static_cast<double>(inside) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

} // namespace fanet
