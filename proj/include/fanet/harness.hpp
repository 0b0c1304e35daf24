#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "fanet/beamforming.hpp"
#include "fanet/channel.hpp"
#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"
#include "fanet/random.hpp"
#include "fanet/routing.hpp"
#include "fanet/stats.hpp"
#include "fanet/tracking.hpp"
#include "fanet/uncertainty.hpp"

namespace fanet {

enum class Variant { tracked, ideal };

inline std::string_view variant_suffix(Variant v) { return v == Variant::tracked ? "T" : "I"; }

/// Where the controller's attitude estimate comes from.
///   exact:    the commanded attitude, known without error
///   velocity: heading of the tracked velocity
///   noisy:    the true attitude plus Gaussian yaw/pitch error of known spread
enum class AttitudeSource { exact, velocity, noisy };

enum class EndpointRule { farthest_estimated };

struct ExperimentConfig {
  MobilityParams mobility; // includes the map box
  TrackerParams tracker;
  ChannelParams channel;
  std::vector<double> densities{25000.0, 37500.0, 50000.0, 62500.0, 75000.0}; // UAVs per km^3
  std::vector<std::size_t> antennas{1, 4, 8, 16, 32, 64};
  std::vector<Protocol> protocols{Protocol::dbr, Protocol::smurf, Protocol::basmurf};
  std::vector<Variant> variants{Variant::tracked, Variant::ideal};
  std::size_t n_networks = 240;
  std::size_t mc_samples = 1000;
  std::uint64_t master_seed = 1;
  double warmup_s = 5.0;          // tracking time before the routing instant
  bool require_connected = true;  // resample networks whose true range graph is split
  std::size_t max_attempts = 1000;
  double floor_throughput = 0.0;  // scored by runs without a route
  double cross_traffic = 0.0;     // rho, same for every UAV
  GainModel gain_model = GainModel::normalized;
  DbrMetric dbr_metric = DbrMetric::hop_count;
  AttitudeSource attitude = AttitudeSource::noisy;
  double attitude_noise = 0.08; // rad, used by AttitudeSource::noisy
  EndpointRule endpoints = EndpointRule::farthest_estimated;
  std::size_t threads = 0; // 0: one per hardware thread
  std::string output_dir; // empty: decided by the caller

  void validate() const {
    mobility.validate();
    tracker.validate();
    channel.validate();
    if (!(attitude_noise >= 0.0) || !std::isfinite(attitude_noise))
      throw ConfigError("tracker.attitude_noise_rad", "must be finite and nonnegative");
    if (densities.empty())
      throw ConfigError("experiment.densities", "need at least one density");
    for (double d : densities)
      if (!(d > 0.0))
        throw ConfigError("experiment.densities", "densities must be positive");
    if (antennas.empty())
      throw ConfigError("experiment.antennas", "need at least one antenna count");
    for (auto m : antennas)
      try {
        upa_for_elements(m);
      } catch (const InvalidArgument &e) {
        throw ConfigError("experiment.antennas", e.what());
      }
    if (protocols.empty())
      throw ConfigError("experiment.protocols", "need at least one protocol");
    if (variants.empty())
      throw ConfigError("experiment.variants", "need at least one variant");
    if (n_networks < 1)
      throw ConfigError("experiment.networks", "need at least one network");
    if (mc_samples < 1)
      throw ConfigError("routing.samples", "need at least one Monte Carlo sample");
    if (!(warmup_s >= tracker.measurement_interval))
      throw ConfigError("tracker.warmup_s", "warm-up must cover at least one measurement");
    if (max_attempts < 1)
      throw ConfigError("experiment.max_attempts", "need at least one attempt");
    if (!(floor_throughput >= 0.0))
      throw ConfigError("experiment.floor_throughput", "floor must be nonnegative");
    if (!(cross_traffic >= 0.0 && cross_traffic <= 1.0))
      throw ConfigError("routing.cross_traffic", "cross traffic must lie in [0, 1]");
  }
};

struct RunRecord {
  Protocol protocol = Protocol::basmurf;
  Variant variant = Variant::tracked;
  double density = 0.0;
  std::size_t antennas = 1;
  std::uint64_t seed = 0;
  std::size_t uavs = 0;
  std::vector<std::size_t> route;
  double throughput_bps = 0.0;
  double interference_db = std::numeric_limits<double>::quiet_NaN(); // NaN without a route
  double runtime_s = 0.0;

  [[nodiscard]] std::size_t path_len() const noexcept { return route.empty() ? 0 : route.size() - 1; }
};

inline std::size_t uav_count(double density, const Vec3 &box) {
  const double km3 = box.x() * box.y() * box.z() * 1e-9;
  return static_cast<std::size_t>(std::llround(density * km3));
}

/// Uniform positions in the box, random headings and speeds.
inline std::vector<UavState> generate_network(double density, const MobilityParams &params, std::uint64_t seed) {
  if (!(density > 0.0))
    throw InvalidArgument("density must be positive");
  params.validate();
  const std::size_t k = uav_count(density, params.box);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<UavState> out(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto &s = out[i];
    s.id = i;
    s.position = {unit(rng) * params.box.x(), unit(rng) * params.box.y(), unit(rng) * params.box.z()};
    const double speed = params.speed_min + unit(rng) * (params.speed_max - params.speed_min);
    const double yaw = wrap_angle(2.0 * kPi * unit(rng) - kPi);
    const double pitch = std::clamp(params.pitch_sigma * normal(rng), -params.max_pitch, params.max_pitch);
    s.velocity = velocity_from(speed, yaw, pitch);
    s.attitude = {yaw, pitch};
  }
  return out;
}

inline bool range_graph_connected(const std::vector<Vec3> &positions, double range) {
  if (positions.empty())
    return true;
  std::vector<bool> seen(positions.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (std::size_t u = 0; u < positions.size(); ++u)
      if (!seen[u] && distance(positions[u], positions[v]) <= range) {
        seen[u] = true;
        ++count;
        stack.push_back(u);
      }
  }
  return count == positions.size();
}

/// A network at its routing instant: ground truth plus the controller's
/// tracked belief.
struct Scenario {
  std::uint64_t seed = 0;
  std::size_t attempts = 0;
  std::vector<UavState> truth;
  SwarmBelief tracked;
  std::size_t source = 0;
  std::size_t dest = 0;
};

namespace detail {
enum Stream : std::uint64_t { kScenario = 1, kPlacement, kMobility, kTracker, kMonteCarlo, kAttitude };

inline std::uint64_t density_key(double density) { return static_cast<std::uint64_t>(std::llround(density * 1000.0)); }
} // namespace detail

inline std::pair<std::size_t, std::size_t> farthest_pair(const SwarmBelief &belief) {
  if (belief.size() < 2)
    throw InvalidArgument("need at least two UAVs for a route");
  std::pair<std::size_t, std::size_t> best{0, 1};
  double far = -1.0;
  for (std::size_t i = 0; i < belief.size(); ++i)
    for (std::size_t j = i + 1; j < belief.size(); ++j) {
      const double d = distance(belief.estimates[i].mean, belief.estimates[j].mean);
      if (d > far) {
        far = d;
        best = {i, j};
      }
    }
  return best;
}

/// Generates, moves and tracks network `index` of a density cell until the
/// routing instant. Streams depend on (master seed, density, index, attempt)
/// only, so every protocol, variant and antenna count sees the same network.
inline Scenario build_scenario(const ExperimentConfig &cfg, double density, std::size_t index) {
  const std::size_t fixes =
      static_cast<std::size_t>(std::llround(cfg.warmup_s / cfg.tracker.measurement_interval));
  for (std::size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Scenario sc;
    sc.seed = derive_seed(cfg.master_seed, {detail::kScenario, detail::density_key(density), index, attempt});
    sc.attempts = attempt + 1;
    sc.truth = generate_network(density, cfg.mobility, derive_seed(sc.seed, {detail::kPlacement}));
    if (sc.truth.size() < 2)
      throw InvalidArgument("density yields fewer than two UAVs in the map box");
    SwarmMobility mobility(cfg.mobility, derive_seed(sc.seed, {detail::kMobility}));
    SwarmTracker tracker(sc.truth, cfg.tracker, derive_seed(sc.seed, {detail::kTracker}));
    for (std::size_t f = 0; f < std::max<std::size_t>(fixes, 1); ++f) {
      mobility.step(sc.truth, cfg.tracker.measurement_interval);
      tracker.observe(sc.truth, cfg.tracker.measurement_interval);
    }
    const double now = static_cast<double>(fixes) * cfg.tracker.measurement_interval;
    sc.tracked = tracker.belief(now, cfg.attitude == AttitudeSource::velocity ? nullptr : &sc.truth);
    if (cfg.attitude == AttitudeSource::noisy && cfg.attitude_noise > 0.0) {
      Rng rng(derive_seed(sc.seed, {detail::kAttitude}));
      std::normal_distribution<double> normal(0.0, cfg.attitude_noise);
      for (auto &e : sc.tracked.estimates) {
        e.attitude.yaw = wrap_angle(e.attitude.yaw + normal(rng));
        e.attitude.pitch += normal(rng);
        e.attitude_sigma = cfg.attitude_noise;
      }
    }
    if (cfg.require_connected && !range_graph_connected(realization_of(sc.truth).positions, cfg.channel.max_distance_m))
      continue;
    std::tie(sc.source, sc.dest) = farthest_pair(sc.tracked);
    return sc;
  }
  throw Error("no connected network after " + std::to_string(cfg.max_attempts) + " attempts at density " +
              std::to_string(density));
}

inline NetworkBelief network_belief(const ExperimentConfig &cfg, const SwarmBelief &belief, std::size_t antennas) {
  NetworkBelief net;
  net.swarm = belief;
  net.channel = cfg.channel;
  net.upa = upa_for_elements(antennas);
  net.upa.wavelength = cfg.channel.wavelength();
  net.beam = full_beam(net.upa);
  if (cfg.cross_traffic > 0.0)
    net.cross_traffic.assign(belief.size(), cfg.cross_traffic);
  net.gain_model = cfg.gain_model;
  return net;
}

inline RouteResult compute_route(Protocol protocol, const NetworkBelief &net, std::size_t source, std::size_t dest,
                                 const ExperimentConfig &cfg, std::uint64_t mc_seed) {
  switch (protocol) {
  case Protocol::dbr:
    return route_dbr(net, source, dest, cfg.dbr_metric);
  case Protocol::smurf:
    return route_smurf(net, source, dest, cfg.mc_samples, mc_seed);
  case Protocol::basmurf:
    return route_basmurf(net, source, dest, cfg.mc_samples, mc_seed);
  }
  throw InvalidArgument("unknown protocol");
}

/// One protocol on one scenario. Routes are computed from the tracked belief
/// ("-T") or the true state ("-I"); both are scored on the true state.
inline RunRecord evaluate_protocol(const ExperimentConfig &cfg, const Scenario &sc, double density,
                                   std::size_t antennas, Protocol protocol, Variant variant) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.protocol = protocol;
  rec.variant = variant;
  rec.density = density;
  rec.antennas = antennas;
  rec.seed = sc.seed;
  rec.uavs = sc.truth.size();

  const SwarmBelief belief = variant == Variant::tracked ? sc.tracked : exact_belief(sc.truth, sc.tracked.timestamp);
  const NetworkBelief net = network_belief(cfg, belief, antennas);
  const auto truth = realization_of(sc.truth);
  const std::uint64_t mc_seed = derive_seed(sc.seed, {detail::kMonteCarlo, antennas});
  try {
    const auto route = compute_route(protocol, net, sc.source, sc.dest, cfg, mc_seed);
    const auto ev = evaluate_route(route, truth, net);
    rec.route = route.path;
    rec.throughput_bps = std::max(ev.throughput, cfg.floor_throughput);
    rec.interference_db = interference_metric(route, truth, net);
  } catch (const DisconnectedError &) {
    rec.throughput_bps = cfg.floor_throughput;
  }
  rec.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Runs fn(0..count-1) on a pool of worker threads. The first exception is
/// rethrown after all workers stop.
template <class Fn> void parallel_for(std::size_t count, std::size_t threads, Fn &&fn) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k; !failed && (k = next++) < count;) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        failed = true;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back(worker);
    for (auto &t : pool)
      t.join();
  }
  if (error)
    std::rethrow_exception(error);
}

/// Full sweep protocol x variant x density x antennas x network. Records come
/// back in that nesting order regardless of scheduling.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig &cfg) {
  cfg.validate();
  const std::size_t np = cfg.protocols.size(), nv = cfg.variants.size(), nd = cfg.densities.size(),
                    nm = cfg.antennas.size(), nn = cfg.n_networks;
  std::vector<RunRecord> out(np * nv * nd * nm * nn);
  parallel_for(nd * nn, cfg.threads, [&](std::size_t task) {
    const std::size_t d = task / nn, n = task % nn;
    const Scenario sc = build_scenario(cfg, cfg.densities[d], n);
    for (std::size_t p = 0; p < np; ++p)
      for (std::size_t v = 0; v < nv; ++v)
        for (std::size_t m = 0; m < nm; ++m)
          out[(((p * nv + v) * nd + d) * nm + m) * nn + n] =
              evaluate_protocol(cfg, sc, cfg.densities[d], cfg.antennas[m], cfg.protocols[p], cfg.variants[v]);
  });
  return out;
}

/// %.9g, with fixed spellings for non-finite values.
inline std::string format_number(double x) {
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string protocol_label(Protocol p, Variant v) {
  return std::string(protocol_name(p)) + "-" + std::string(variant_suffix(v));
}

inline void write_runs_csv(std::ostream &os, const std::vector<RunRecord> &records, bool include_runtime = true) {
  os << "protocol,variant,density,antennas,seed,K,path_len,throughput_bps,interference_db";
  os << (include_runtime ? ",runtime_s\n" : "\n");
  for (const auto &r : records) {
    os << protocol_name(r.protocol) << ',' << variant_suffix(r.variant) << ',' << format_number(r.density) << ','
       << r.antennas << ',' << r.seed << ',' << r.uavs << ',' << r.path_len() << ','
       << format_number(r.throughput_bps) << ',' << format_number(r.interference_db);
    if (include_runtime)
      os << ',' << format_number(r.runtime_s);
    os << '\n';
  }
}

struct CellSummary {
  Protocol protocol = Protocol::basmurf;
  Variant variant = Variant::tracked;
  double density = 0.0;
  std::size_t antennas = 1;
  std::size_t runs = 0;
  std::size_t failures = 0; // runs without a route
  double mean = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0;
  double interference_db_mean = std::numeric_limits<double>::quiet_NaN(); // over runs with a route
  double path_len_mean = 0.0;
};

/// Per-cell throughput statistics, in first-appearance order of the cells.
inline std::vector<CellSummary> summarize(const std::vector<RunRecord> &records) {
  using Key = std::tuple<int, int, double, std::size_t>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord *>> cells;
  for (const auto &r : records) {
    const Key k{static_cast<int>(r.protocol), static_cast<int>(r.variant), r.density, r.antennas};
    auto [it, fresh] = cells.try_emplace(k);
    if (fresh)
      order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<CellSummary> out;
  for (const auto &k : order) {
    const auto &rs = cells[k];
    CellSummary c;
    c.protocol = rs.front()->protocol;
    c.variant = rs.front()->variant;
    c.density = rs.front()->density;
    c.antennas = rs.front()->antennas;
    c.runs = rs.size();
    std::vector<double> tp, interference;
    double hops = 0.0;
    for (const auto *r : rs) {
      tp.push_back(r->throughput_bps);
      hops += static_cast<double>(r->path_len());
      if (r->route.empty())
        ++c.failures;
      else if (std::isfinite(r->interference_db))
        interference.push_back(r->interference_db);
    }
    c.mean = stats::mean(tp);
    c.p25 = stats::percentile(tp, 0.25);
    c.p50 = stats::percentile(tp, 0.50);
    c.p75 = stats::percentile(tp, 0.75);
    if (!interference.empty())
      c.interference_db_mean = stats::mean(interference);
    c.path_len_mean = hops / static_cast<double>(rs.size());
    out.push_back(c);
  }
  return out;
}

inline void write_summary_csv(std::ostream &os, const std::vector<CellSummary> &cells) {
  os << "protocol,variant,density,antennas,runs,failures,mean,p25,p50,p75,interference_db_mean,path_len_mean\n";
  for (const auto &c : cells)
    os << protocol_name(c.protocol) << ',' << variant_suffix(c.variant) << ',' << format_number(c.density) << ','
       << c.antennas << ',' << c.runs << ',' << c.failures << ',' << format_number(c.mean) << ','
       << format_number(c.p25) << ',' << format_number(c.p50) << ',' << format_number(c.p75) << ','
       << format_number(c.interference_db_mean) << ',' << format_number(c.path_len_mean) << '\n';
}

/// Writes runs.csv and summary.csv into `dir`, creating it if needed.
inline void write_results(const std::filesystem::path &dir, const std::vector<RunRecord> &records) {
  std::filesystem::create_directories(dir);
  std::ofstream runs(dir / "runs.csv");
  std::ofstream summary(dir / "summary.csv");
  if (!runs || !summary)
    throw Error("cannot write results into " + dir.string());
  write_runs_csv(runs, records);
  write_summary_csv(summary, summarize(records));
}

} // namespace fanet
