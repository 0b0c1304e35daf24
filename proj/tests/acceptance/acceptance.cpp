// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <Eigen/Dense>

#include "fanet/fanet.hpp"

using namespace fanet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- oracles

void enumerate(const WeightedGraph &g, std::size_t v, std::size_t t, std::vector<std::size_t> &path,
               std::vector<bool> &used, double &best) {
  if (v == t) {
    best = std::max(best, path_bottleneck(g, path));
    return;
  }
  for (std::size_t u = 0; u < g.size(); ++u)
    if (!used[u] && g.has(v, u)) {
      used[u] = true;
      path.push_back(u);
      enumerate(g, u, t, path, used, best);
      path.pop_back();
      used[u] = false;
    }
}

Outcome widest_path_oracle() {
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<std::size_t> nodes(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0, connected = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = nodes(rng);
    const bool symmetric = trial % 2 == 0;
    WeightedGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j)
        if (i != j && u(rng) < 0.5) {
          const double w = trial % 3 == 0 ? std::floor(u(rng) * 4) + 1 : u(rng) * 1e9;
          symmetric ? g.add_edge(i, j, w) : g.add_arc(i, j, w);
        }
    double best = -1.0;
    std::vector<std::size_t> path{0};
    std::vector<bool> used(n, false);
    used[0] = true;
    enumerate(g, 0, n - 1, path, used, best);
    if (best < 0.0) {
      try {
        widest_path(g, 0, n - 1);
        ++mismatches;
      } catch (const DisconnectedError &) {
      }
      continue;
    }
    ++connected;
    const auto r = widest_path(g, 0, n - 1);
    if (r.value != best || path_bottleneck(g, r.path) != best)
      ++mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && elapsed < 10.0,
          fmt("500 graphs (%d connected), %d mismatches, %.3f s", connected, mismatches, elapsed)};
}

Outcome link_probability_oracle() {
  const double sigma = 4.0;
  const std::vector<double> ratios{0.5, 1.0, 1.5, 2.0, 3.0};
  const std::vector<std::size_t> sizes{1000, 1778, 3162, 5623, 10000};
  SwarmBelief b;
  // Relative covariance sigma^2 I split evenly, zero mean separation.
  b.estimates.push_back({Vec3(10, 20, 5), 0.5 * sigma * sigma * Mat3::Identity(), {}});
  b.estimates.push_back({Vec3(10, 20, 5), 0.5 * sigma * sigma * Mat3::Identity(), {}});
  double worst = 0.0;
  int failures = 0;
  std::uint64_t seed = 1;
  for (double r : ratios)
    for (std::size_t n : sizes) {
      const double p = boost::math::cdf(boost::math::chi_squared(3.0), r * r);
      const auto est = link_existence_probability(b, 0, 1, r * sigma, n, seed++);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
      const double z = std::abs(est.probability - p) / se;
      worst = std::max(worst, z);
      failures += z > 3.0;
    }
  return {failures == 0, fmt("25 cells, worst |error| = %.2f SE", worst)};
}

Outcome beamforming_identities() {
  double modulus = 0.0, gain = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> az(-kPi, kPi), el(-kPi / 2, kPi / 2);
  for (std::size_t m : {1, 4, 8, 16, 32, 64}) {
    const auto cfg = upa_for_elements(m);
    for (int k = 0; k < 50; ++k) {
      const Angles a{az(rng), el(rng)};
      for (const auto &v : steering_vector(a, cfg))
        modulus = std::max(modulus, std::abs(std::abs(v) - 1.0));
      const Angles rx = reciprocal_angles(a);
      const double g = link_gain(a, rx, SteeredBeam{full_beam(cfg), a}, SteeredBeam{full_beam(cfg), rx}, cfg);
      gain = std::max(gain, std::abs(g - static_cast<double>(m)) / static_cast<double>(m));
    }
  }
  const UpaConfig pair{2, 1, 0.5, 0.5};
  const double null = array_response(Angles{kPi / 2, 0.0}, full_beam(pair), pair);
  return {modulus < 1e-12 && gain < 1e-9 && null < 1e-9,
          fmt("max ||a|-1| = %.1e, max gain error = %.1e, null = %.1e", modulus, gain, null)};
}

// Closed-form linear Kalman filter for the constant-velocity model.
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

Mat6 transition(double dt) {
  Mat6 f = Mat6::Identity();
  f.topRightCorner<3, 3>() = dt * Mat3::Identity();
  return f;
}

Outcome ukf_exactness() {
  const double dt = 0.1, q = 2.0, r = 1.5;
  TrackerParams tp;
  tp.process_noise = q;
  tp.measurement_noise = r;
  tp.along_track_ratio = 1.0;
  tp.initial_velocity_sigma = 3.0;
  const Mat6 qd = constant_velocity_process_noise(q, dt);
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>() = Mat3::Identity();

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  auto noise3 = [&] { return Vec3(n(rng), n(rng), n(rng)); };

  Vec3 pos(10, 20, 5);
  const Vec3 vel(3, -1, 0.2);
  const Vec3 first = pos + r * noise3();
  PositionTracker ukf(first, tp);
  Vec6 x = Vec6::Zero();
  x.head<3>() = first;
  Mat6 p = Mat6::Zero();
  p.topLeftCorner<3, 3>() = r * r * Mat3::Identity();
  p.bottomRightCorner<3, 3>() = 9.0 * Mat3::Identity();
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    pos += dt * vel;
    const Vec3 z = pos + r * noise3();
    ukf.predict(dt);
    ukf.update(z);
    const Mat6 f = transition(dt);
    x = f * x;
    p = f * p * f.transpose() + qd;
    const Mat3 s = h * p * h.transpose() + r * r * Mat3::Identity();
    const Eigen::Matrix<double, 6, 3> gain = p * h.transpose() * s.inverse();
    x += gain * (z - h * x);
    p = (Mat6::Identity() - gain * h) * p;
    worst = std::max({worst, (ukf.state() - x).norm() / x.norm(), (ukf.covariance() - p).norm() / p.norm()});
  }

  // NEES over 100 independent runs on truth drawn from the filter's own model.
  const Mat6 root = Eigen::LLT<Mat6>(qd).matrixL();
  const int runs = 100;
  double nees = 0.0;
  for (int run = 0; run < runs; ++run) {
    Vec6 truth;
    truth.head<3>() = Vec3(50, 50, 5);
    truth.tail<3>() = tp.initial_velocity_sigma * noise3();
    PositionTracker f(truth.head<3>() + r * noise3(), tp);
    for (int k = 0; k < 200; ++k) {
      Vec6 w;
      for (int i = 0; i < 6; ++i)
        w[i] = n(rng);
      truth = transition(dt) * truth + root * w;
      f.predict(dt);
      f.update(truth.head<3>() + r * noise3());
    }
    const Vec6 e = truth - f.state();
    nees += e.dot(f.covariance().ldlt().solve(e));
  }
  const boost::math::chi_squared chi(6.0 * runs);
  const double lo = boost::math::quantile(chi, 0.025), hi = boost::math::quantile(chi, 0.975);
  return {worst < 1e-6 && nees >= lo && nees <= hi,
          fmt("max relative deviation %.1e over 1000 steps; NEES %.1f in [%.1f, %.1f]", worst, nees, lo, hi)};
}

// ---------------------------------------------------------------- sweeps

using Cell = std::tuple<Protocol, Variant, double, std::size_t>;

struct Sweep {
  std::map<Cell, std::vector<double>> throughput;   // per network, in network order
  std::map<Cell, std::vector<double>> interference; // finite values only
  double cell_runtime = 0.0;                        // seconds at the protocol-ordering cell
};

Sweep collect(const std::vector<RunRecord> &records, double density, std::size_t antennas) {
  Sweep s;
  for (const auto &r : records) {
    const Cell c{r.protocol, r.variant, r.density, r.antennas};
    s.throughput[c].push_back(r.throughput_bps);
    if (std::isfinite(r.interference_db))
      s.interference[c].push_back(r.interference_db);
    if (r.density == density && r.antennas == antennas && r.variant == Variant::tracked)
      s.cell_runtime += r.runtime_s;
  }
  return s;
}

double mean_of(const std::vector<double> &x) { return stats::mean(x); }

double std_error(const std::vector<double> &x) {
  return std::sqrt(stats::variance(x) / static_cast<double>(x.size()));
}

// One-sided paired t-test of mean(a - b) > 0.
double paired_p_greater(const std::vector<double> &a, const std::vector<double> &b) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    d[k] = a[k] - b[k];
  const double se = std_error(d);
  if (se == 0.0)
    return mean_of(d) > 0.0 ? 0.0 : 1.0;
  const boost::math::students_t t(static_cast<double>(d.size() - 1));
  return boost::math::cdf(boost::math::complement(t, mean_of(d) / se));
}

std::string label(Protocol p, Variant v) { return protocol_label(p, v); }

constexpr double kCellDensity = 50000.0;
constexpr std::size_t kCellAntennas = 16;

Outcome protocol_ordering(const Sweep &s, const ExperimentConfig &cfg) {
  const auto &ba = s.throughput.at({Protocol::basmurf, Variant::tracked, kCellDensity, kCellAntennas});
  bool ok = ba.size() >= 200 && s.cell_runtime < 600.0;
  std::string detail = fmt("%zu seeds", ba.size());
  for (auto other : {Protocol::smurf, Protocol::dbr}) {
    const auto &o = s.throughput.at({other, Variant::tracked, kCellDensity, kCellAntennas});
    const double margin = mean_of(ba) / mean_of(o) - 1.0;
    const double p = paired_p_greater(ba, o);
    ok = ok && margin >= 0.02 && p < 0.05;
    detail += fmt("; vs %s-T %+.2f%% (p=%.2g)", std::string(protocol_name(other)).c_str(), 100 * margin, p);
  }
  (void)cfg;
  return {ok, detail + fmt("; cell runtime %.0f s", s.cell_runtime)};
}

Outcome tracked_ideal_gap(const Sweep &s, const ExperimentConfig &cfg) {
  bool ok = true;
  std::string detail;
  for (auto p : cfg.protocols) {
    const double t = mean_of(s.throughput.at({p, Variant::tracked, kCellDensity, kCellAntennas}));
    const double i = mean_of(s.throughput.at({p, Variant::ideal, kCellDensity, kCellAntennas}));
    const double gap = i / t - 1.0;
    ok = ok && gap >= 0.03 && gap <= 0.20;
    detail += fmt("%s%s %+.2f%%", detail.empty() ? "" : "; ", std::string(protocol_name(p)).c_str(), 100 * gap);
  }
  return {ok, detail};
}

Outcome antenna_trends(const Sweep &s, const ExperimentConfig &cfg) {
  bool ok = true;
  std::string detail;
  for (auto p : cfg.protocols) {
    std::vector<double> tracked, ideal;
    for (auto m : cfg.antennas) {
      tracked.push_back(mean_of(s.throughput.at({p, Variant::tracked, kCellDensity, m})));
      ideal.push_back(mean_of(s.throughput.at({p, Variant::ideal, kCellDensity, m})));
    }
    bool decreasing = true;
    for (std::size_t k = 1; k < tracked.size(); ++k)
      decreasing = decreasing && tracked[k] < tracked[k - 1];
    const double centre = stats::mean(ideal);
    double spread = 0.0;
    for (double v : ideal)
      spread = std::max(spread, std::abs(v / centre - 1.0));
    const auto &t1 = s.throughput.at({p, Variant::tracked, kCellDensity, cfg.antennas.front()});
    const auto &i1 = s.throughput.at({p, Variant::ideal, kCellDensity, cfg.antennas.front()});
    const double se = std::hypot(std_error(t1), std_error(i1));
    const double z = std::abs(mean_of(t1) - mean_of(i1)) / se;
    ok = ok && decreasing && spread <= 0.02 && z <= 3.0;
    detail += fmt("%s%s %s, ideal spread %.2f%%, M=1 |T-I| %.2f SE", detail.empty() ? "" : "; ",
                  std::string(protocol_name(p)).c_str(), decreasing ? "decreasing" : "NOT decreasing", 100 * spread, z);
  }
  return {ok, detail};
}

Outcome density_trends(const Sweep &s, const ExperimentConfig &cfg) {
  auto fit = [&](Protocol p) {
    std::vector<double> x, y;
    for (double d : cfg.densities)
      for (double v : s.throughput.at({p, Variant::tracked, d, kCellAntennas})) {
        x.push_back(d);
        y.push_back(v);
      }
    const auto f = stats::linear_fit(x, y);
    const boost::math::students_t t(static_cast<double>(f.n - 2));
    const double p_two = 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(f.slope / f.slope_std_error)));
    return std::pair{f.slope, p_two};
  };
  const auto [dbr, dbr_p] = fit(Protocol::dbr);
  const auto [smurf, smurf_p] = fit(Protocol::smurf);
  const auto [ba, ba_p] = fit(Protocol::basmurf);
  bool ordered = true;
  for (double d : cfg.densities)
    ordered = ordered && mean_of(s.throughput.at({Protocol::basmurf, Variant::tracked, d, kCellAntennas})) >=
                             mean_of(s.throughput.at({Protocol::smurf, Variant::tracked, d, kCellAntennas}));
  const bool ok = smurf > 0.0 && ba > 0.0 && dbr_p >= 0.05 && ordered;
  return {ok, fmt("slopes (bit/s per UAV/km^3): DBR-T %.4g (p=%.2g), SMURF-T %.4g (p=%.2g), BA-SMURF-T %.4g "
                  "(p=%.2g); BA-SMURF-T >= SMURF-T at every density: %s",
                  dbr, dbr_p, smurf, smurf_p, ba, ba_p, ordered ? "yes" : "no")};
}

Outcome interference_trend(const Sweep &s, const ExperimentConfig &cfg) {
  bool ok = true;
  std::string detail;
  for (auto p : cfg.protocols)
    for (auto v : cfg.variants) {
      std::vector<double> means;
      for (auto m : cfg.antennas) {
        std::vector<double> all;
        for (double d : cfg.densities) {
          const auto &x = s.interference.at({p, v, d, m});
          all.insert(all.end(), x.begin(), x.end());
        }
        means.push_back(stats::mean(all));
      }
      bool decreasing = true;
      for (std::size_t k = 1; k < means.size(); ++k)
        decreasing = decreasing && means[k] < means[k - 1];
      ok = ok && decreasing;
      detail += fmt("%s%s %.1f..%.1f dB", detail.empty() ? "" : "; ", label(p, v).c_str(), means.front(), means.back());
    }
  return {ok, detail};
}

std::string runs_without_runtime(const std::vector<RunRecord> &records) {
  std::ostringstream os;
  write_runs_csv(os, records, false);
  write_summary_csv(os, summarize(records));
  return os.str();
}

Outcome noise_convergence(const ExperimentConfig &base) {
  auto cfg = base;
  cfg.tracker.measurement_noise = 1e-6;
  cfg.attitude_noise = 0.0;
  cfg.densities = {kCellDensity};
  cfg.antennas = {1, 16, 64};
  cfg.n_networks = 100;
  const auto s = collect(run_experiment(cfg), kCellDensity, kCellAntennas);
  bool ok = true;
  double worst = 0.0;
  for (auto p : cfg.protocols)
    for (auto m : cfg.antennas) {
      const double t = mean_of(s.throughput.at({p, Variant::tracked, kCellDensity, m}));
      const double i = mean_of(s.throughput.at({p, Variant::ideal, kCellDensity, m}));
      const double rel = std::abs(t / i - 1.0);
      worst = std::max(worst, rel);
      ok = ok && rel <= 0.005;
    }
  return {ok, fmt("100 seeds, M in {1,16,64}: worst |T/I - 1| = %.3f%%", 100 * worst)};
}

} // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char *name, const Outcome &o) {
    std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };
  auto guarded = [](const std::function<Outcome()> &fn) {
    try {
      return fn();
    } catch (const std::exception &e) {
      return Outcome{false, std::string("error: ") + e.what()};
    }
  };

  report(1, "widest-path oracle", guarded(widest_path_oracle));
  report(2, "link-probability oracle", guarded(link_probability_oracle));
  report(3, "beamforming identities", guarded(beamforming_identities));
  report(4, "UKF exactness and NEES", guarded(ukf_exactness));

  const ExperimentConfig cfg;
  std::fprintf(stderr, "running default sweep (%zu networks per cell)...\n", cfg.n_networks);
  auto t0 = std::chrono::steady_clock::now();
  std::vector<RunRecord> first;
  std::string first_error;
  try {
    first = run_experiment(cfg);
  } catch (const std::exception &e) {
    first_error = e.what();
  }
  std::fprintf(stderr, "first sweep took %.0f s\n", seconds_since(t0));
  if (!first_error.empty()) {
    for (int id = 5; id <= 10; ++id)
      report(id, "sweep", {false, "sweep failed: " + first_error});
  } else {
    const auto s = collect(first, kCellDensity, kCellAntennas);
    report(5, "protocol ordering", guarded([&] { return protocol_ordering(s, cfg); }));
    report(6, "tracked vs ideal gap", guarded([&] { return tracked_ideal_gap(s, cfg); }));
    report(7, "antenna-count trends", guarded([&] { return antenna_trends(s, cfg); }));
    report(8, "density trends", guarded([&] { return density_trends(s, cfg); }));
    report(9, "interference trend", guarded([&] { return interference_trend(s, cfg); }));
    report(10, "determinism", guarded([&] {
             t0 = std::chrono::steady_clock::now();
             const bool same = runs_without_runtime(first) == runs_without_runtime(run_experiment(cfg));
             return Outcome{same, fmt("%zu runs, %s (rerun %.0f s)", first.size(),
                                      same ? "byte-identical" : "outputs differ", seconds_since(t0))};
           }));
  }
  report(11, "degenerate-noise convergence", guarded([&] { return noise_convergence(cfg); }));

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
