#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "fanet/errors.hpp"

namespace fanet::stats {

inline double mean(std::span<const double> x) {
  if (x.empty())
    throw InvalidArgument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  if (x.size() < 2)
    throw InvalidArgument("variance needs at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x)
    s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Linear-interpolation percentile (q in [0, 1]) of the sorted sample.
inline double percentile(std::vector<double> x, double q) {
  if (x.empty())
    throw InvalidArgument("percentile of an empty sample");
  if (q < 0.0 || q > 1.0)
    throw InvalidArgument("percentile rank must lie in [0, 1]");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
  std::size_t n = 0;
};

/// Ordinary least squares y = a + b x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw InvalidArgument("fit needs paired samples");
  if (x.size() < 3)
    throw InvalidArgument("fit needs at least three points");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0)
    throw InvalidArgument("fit needs at least two distinct x values");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - f.intercept - f.slope * x[k];
    rss += r * r;
  }
  f.slope_std_error = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  return f;
}

} // namespace fanet::stats
