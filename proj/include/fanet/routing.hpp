#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fanet/beamforming.hpp"
#include "fanet/channel.hpp"
#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"
#include "fanet/graph.hpp"
#include "fanet/random.hpp"
#include "fanet/uncertainty.hpp"

namespace fanet {

enum class Protocol { dbr, smurf, basmurf };

inline std::string_view protocol_name(Protocol p) {
  switch (p) {
  case Protocol::dbr:
    return "DBR";
  case Protocol::smurf:
    return "SMURF";
  case Protocol::basmurf:
    return "BA-SMURF";
  }
  return "?";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "DBR" || s == "dbr")
    return Protocol::dbr;
  if (s == "SMURF" || s == "smurf")
    return Protocol::smurf;
  if (s == "BA-SMURF" || s == "ba-smurf" || s == "basmurf")
    return Protocol::basmurf;
  return std::nullopt;
}

/// How array responses turn into a power gain.
///   normalized: (h_tx / n_tx) * (h_rx / n_rx), peak 1 for every array size
///               (fixed total radiated power across configurations)
///   array:      h_tx * h_rx / M, the raw realized gain (peak M)
enum class GainModel { normalized, array };

/// Edge metric used by DBR on the estimated range graph.
enum class DbrMetric { capacity, hop_count };

struct LinkWeight {
  std::size_t i = 0;
  std::size_t j = 0;
  double expected_capacity = 0.0; // bit/s
  double existence_probability = 0.0;
  double mc_std_error = 0.0; // bit/s
  std::size_t samples = 0;
};

/// Beam aim for one hop, computed by the controller from its belief.
struct HopBeam {
  std::size_t tx = 0;
  std::size_t rx = 0;
  Angles tx_aim;
  Angles rx_aim;
};

struct RouteResult {
  Protocol protocol = Protocol::basmurf;
  std::vector<std::size_t> path;
  double bottleneck_capacity = 0.0; // C(r) under the routing-time estimates
  std::vector<LinkWeight> links;    // one per hop, in path order
  std::vector<HopBeam> beams;       // one per hop, in path order

  [[nodiscard]] std::size_t hops() const noexcept { return path.empty() ? 0 : path.size() - 1; }
  [[nodiscard]] bool contains(std::size_t id) const {
    return std::find(path.begin(), path.end(), id) != path.end();
  }
};

inline bool share_uav(const RouteResult &a, const RouteResult &b) {
  return std::any_of(a.path.begin(), a.path.end(), [&](std::size_t id) { return b.contains(id); });
}

/// The controller's view of the network.
struct NetworkBelief {
  SwarmBelief swarm;
  ChannelParams channel;
  UpaConfig upa;
  BeamPattern beam;                  // same pattern on every UAV
  std::vector<double> cross_traffic; // rho per UAV; empty means all zero
  std::vector<RouteResult> active_routes;
  GainModel gain_model = GainModel::normalized;

  [[nodiscard]] std::size_t size() const noexcept { return swarm.size(); }
  [[nodiscard]] double rho(std::size_t id) const { return cross_traffic.empty() ? 0.0 : cross_traffic.at(id); }

  void validate() const {
    channel.validate();
    upa.validate();
    beam.check_fits(upa);
    if (!cross_traffic.empty() && cross_traffic.size() != swarm.size())
      throw InvalidArgument("cross traffic needs one entry per UAV");
    for (double r : cross_traffic)
      if (!(r >= 0.0 && r <= 1.0))
        throw InvalidArgument("cross traffic fraction must lie in [0, 1]");
    for (const auto &route : active_routes)
      for (auto id : route.path)
        if (id >= swarm.size())
          throw InvalidArgument("active route references unknown UAV " + std::to_string(id));
  }
};

/// Positions and attitudes of the whole swarm in one realization.
struct SwarmRealization {
  std::vector<Vec3> positions;
  std::vector<Attitude> attitudes;
};

inline SwarmRealization realization_of(const std::vector<UavState> &states) {
  SwarmRealization r;
  for (const auto &s : states) {
    r.positions.push_back(s.position);
    r.attitudes.push_back(s.attitude);
  }
  return r;
}

inline SwarmRealization realization_of(const SwarmBelief &belief) {
  SwarmRealization r;
  for (const auto &e : belief.estimates) {
    r.positions.push_back(e.mean);
    r.attitudes.push_back(e.attitude);
  }
  return r;
}

/// Aim the controller gives the hop tx -> rx from its estimates.
inline HopBeam aim_hop(const SwarmBelief &belief, std::size_t tx, std::size_t rx) {
  const auto &a = belief.estimates.at(tx);
  const auto &b = belief.estimates.at(rx);
  const Angles tx_aim = relative_angles(a.mean, a.attitude, b.mean);
  return {tx, rx, tx_aim, reciprocal_angles(tx_aim)};
}

namespace detail {

inline double amplitude(double h_tx, double h_rx, const NetworkBelief &net) {
  if (net.gain_model == GainModel::normalized) {
    const double n = static_cast<double>(net.beam.active_count());
    return (h_tx / n) * (h_rx / n);
  }
  return h_tx * h_rx / static_cast<double>(net.upa.elements());
}

// Transmit-only amplitude seen by an omnidirectional bystander.
inline double tx_amplitude(double h_tx, const NetworkBelief &net) {
  if (net.gain_model == GainModel::normalized)
    return h_tx / static_cast<double>(net.beam.active_count());
  return h_tx / static_cast<double>(net.upa.elements());
}

} // namespace detail

/// Capacity of `hop` in one realization of the swarm. Beams keep the aims
/// the controller chose; gains are evaluated at the realized angles. Zero
/// when the realized distance exceeds the maximum link distance.
inline double realized_capacity(const SwarmRealization &truth, const HopBeam &hop,
                                std::span<const HopBeam> interferers, const NetworkBelief &net) {
  const Vec3 &xi = truth.positions[hop.tx];
  const Vec3 &xj = truth.positions[hop.rx];
  const double d = distance(xi, xj);
  if (d == 0.0 || d > net.channel.max_distance_m)
    return 0.0;
  const Attitude &att = truth.attitudes[hop.tx];
  const Angles tx_true = relative_angles(xi, att, xj);
  const double h_tx = steered_response(tx_true, net.beam, hop.tx_aim, net.upa);
  const double h_rx = steered_response(reciprocal_angles(tx_true), net.beam, hop.rx_aim, net.upa);
  const double signal = received_power(detail::amplitude(h_tx, h_rx, net), d, net.channel);

  double interference = 0.0;
  for (const auto &other : interferers) {
    if (other.tx == hop.tx || other.tx == hop.rx)
      continue;
    const Vec3 &xl = truth.positions[other.tx];
    const double dl = distance(xl, xj);
    if (dl == 0.0)
      continue;
    const double g_tx = steered_response(relative_angles(xl, truth.attitudes[other.tx], xj), net.beam,
                                         other.tx_aim, net.upa);
    // Arrival direction at the receiver, in the frame its beam was aimed in.
    const double g_rx =
        steered_response(reciprocal_angles(relative_angles(xl, att, xj)), net.beam, hop.rx_aim, net.upa);
    interference += received_power(detail::amplitude(g_tx, g_rx, net), dl, net.channel);
  }
  return sinr_capacity(signal, interference, net.channel);
}

/// Transmitting hops of the active routes that can interfere with a link
/// between `a` and `b`: routes through either endpoint are TDMA-separated.
inline std::vector<HopBeam> interfering_hops(const NetworkBelief &net, std::size_t a, std::size_t b) {
  std::vector<HopBeam> out;
  for (const auto &route : net.active_routes) {
    if (route.contains(a) || route.contains(b))
      continue;
    out.insert(out.end(), route.beams.begin(), route.beams.end());
  }
  return out;
}

/// Monte Carlo link statistics for every ordered pair, from common
/// whole-swarm draws.
class LinkTable {
public:
  LinkTable() = default;
  explicit LinkTable(std::size_t n) : n_(n), w_(n * n) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        w_[i * n + j].i = i, w_[i * n + j].j = j;
  }
  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] const LinkWeight &at(std::size_t i, std::size_t j) const { return w_.at(i * n_ + j); }
  LinkWeight &at(std::size_t i, std::size_t j) { return w_.at(i * n_ + j); }

private:
  std::size_t n_ = 0;
  std::vector<LinkWeight> w_;
};

enum class LinkQuantities { probability, capacity };

/// Pairs whose estimated separation exceeds the range by this many standard
/// deviations of the relative position are skipped as never in range
/// (Gaussian tail below 1e-15).
inline constexpr double kRangeSkipSigmas = 8.0;

/// Estimates LinkWeight for each ordered pair (or only for `only`, if given).
/// Sample s of every pair uses the same swarm draw. A belief without
/// uncertainty is evaluated once, exactly.
inline LinkTable estimate_links(const NetworkBelief &net, std::size_t samples, std::uint64_t seed,
                                LinkQuantities what,
                                std::optional<std::pair<std::size_t, std::size_t>> only = std::nullopt) {
  net.validate();
  if (samples < 1)
    throw InvalidArgument("need at least one Monte Carlo sample");
  const std::size_t n = net.size();
  const bool exact = net.swarm.degenerate();
  const std::size_t draws = exact ? 1 : samples;
  const double range = net.channel.max_distance_m;

  struct Job {
    std::size_t i, j;
    HopBeam hop;
    std::vector<HopBeam> interferers;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t in_range = 0;
  };
  std::vector<Job> jobs;
  LinkTable table(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || (only && (only->first != i || only->second != j)))
        continue;
      table.at(i, j).samples = samples;
      const auto &a = net.swarm.estimates[i];
      const auto &b = net.swarm.estimates[j];
      const double sigma = std::sqrt(std::max(0.0, (a.covariance + b.covariance).trace()));
      if (distance(a.mean, b.mean) - range > kRangeSkipSigmas * sigma && sigma > 0.0)
        continue;
      if (exact && distance(a.mean, b.mean) > range)
        continue;
      Job job{i, j, aim_hop(net.swarm, i, j), {}};
      if (what == LinkQuantities::capacity)
        job.interferers = interfering_hops(net, i, j);
      jobs.push_back(std::move(job));
    }

  SwarmSampler sampler(net.swarm);
  Rng rng(seed);
  SwarmRealization draw;
  for (std::size_t s = 0; s < draws; ++s) {
    sampler.draw(rng, draw.positions, draw.attitudes);
    for (auto &job : jobs) {
      const double d = distance(draw.positions[job.i], draw.positions[job.j]);
      if (d > range)
        continue;
      ++job.in_range;
      if (what == LinkQuantities::capacity) {
        const double c = realized_capacity(draw, job.hop, job.interferers, net);
        job.sum += c;
        job.sum_sq += c * c;
      }
    }
  }

  const double m = static_cast<double>(draws);
  for (const auto &job : jobs) {
    auto &w = table.at(job.i, job.j);
    w.existence_probability = static_cast<double>(job.in_range) / m;
    if (what == LinkQuantities::capacity) {
      w.expected_capacity = job.sum / m;
      const double var = draws > 1 ? std::max(0.0, (job.sum_sq - m * w.expected_capacity * w.expected_capacity) / (m - 1.0)) : 0.0;
      w.mc_std_error = std::sqrt(var / m);
    }
  }
  return table;
}

/// Expected capacity of i -> j averaged over swarm draws from the belief.
inline LinkWeight expected_link_capacity(const NetworkBelief &net, std::size_t i, std::size_t j,
                                         std::size_t samples, std::uint64_t seed) {
  if (i >= net.size() || j >= net.size())
    throw InvalidArgument("UAV id out of range");
  if (i == j)
    throw InvalidArgument("link endpoints must differ");
  return estimate_links(net, samples, seed, LinkQuantities::capacity, std::pair{i, j}).at(i, j);
}

/// min over hops of (1 - rho_tx) * C / 2.
inline double route_capacity(std::span<const std::size_t> path, std::span<const LinkWeight> weights,
                             std::span<const double> rho) {
  if (path.size() < 2)
    throw InvalidArgument("route needs at least one hop");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const auto it = std::find_if(weights.begin(), weights.end(), [&](const LinkWeight &w) {
      return w.i == path[k] && w.j == path[k + 1];
    });
    if (it == weights.end())
      throw InvalidArgument("missing link weight for hop " + std::to_string(path[k]) + " -> " +
                            std::to_string(path[k + 1]));
    const double r = rho.empty() ? 0.0 : rho[path[k]];
    best = std::min(best, (1.0 - r) * it->expected_capacity / 2.0);
  }
  return best;
}

namespace detail {

inline std::vector<double> rho_vector(const NetworkBelief &net) {
  std::vector<double> out(net.size());
  for (std::size_t k = 0; k < net.size(); ++k)
    out[k] = net.rho(k);
  return out;
}

inline RouteResult make_route(Protocol protocol, const NetworkBelief &net, std::vector<std::size_t> path,
                              std::vector<LinkWeight> links) {
  RouteResult r;
  r.protocol = protocol;
  r.path = std::move(path);
  r.links = std::move(links);
  for (std::size_t k = 0; k + 1 < r.path.size(); ++k)
    r.beams.push_back(aim_hop(net.swarm, r.path[k], r.path[k + 1]));
  const auto rho = rho_vector(net);
  r.bottleneck_capacity = route_capacity(r.path, r.links, rho);
  return r;
}

inline void check_endpoints(const NetworkBelief &net, std::size_t source, std::size_t dest) {
  if (source >= net.size() || dest >= net.size())
    throw InvalidArgument("route endpoint out of range");
  if (source == dest)
    throw InvalidArgument("source and destination must differ");
}

// Among paths made only of certain links (P = 1): fewest hops, then the
// shortest longest hop on the estimated positions (the widest distance
// margin), then lexicographic.
inline PathResult certain_path(const NetworkBelief &net, const LinkTable &table, std::size_t source,
                               std::size_t dest) {
  const std::size_t n = net.size();
  const auto means = realization_of(net.swarm);
  auto subgraph = [&](double longest) {
    WeightedGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && table.at(i, j).existence_probability == 1.0 &&
            distance(means.positions[i], means.positions[j]) <= longest)
          g.add_arc(i, j, 1.0);
    return g;
  };
  std::vector<double> lengths;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && table.at(i, j).existence_probability == 1.0)
        lengths.push_back(distance(means.positions[i], means.positions[j]));
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  if (lengths.empty())
    throw DisconnectedError(source, dest);
  const double hops = min_hop_route(subgraph(lengths.back()), source, dest).value;
  // Smallest length cap that still admits a path with the minimum hop count.
  std::size_t lo = 0, hi = lengths.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    bool ok = false;
    try {
      ok = min_hop_route(subgraph(lengths[mid]), source, dest).value == hops;
    } catch (const DisconnectedError &) {
    }
    ok ? hi = mid : lo = mid + 1;
  }
  auto best = min_hop_route(subgraph(lengths[lo]), source, dest);
  best.value = 0.0;
  return best;
}

} // namespace detail

/// Beam-aware route: widest path over (1 - rho_i) * E[C_ij] / 2.
inline RouteResult route_basmurf(const NetworkBelief &net, std::size_t source, std::size_t dest,
                                 std::size_t samples, std::uint64_t seed) {
  detail::check_endpoints(net, source, dest);
  const auto table = estimate_links(net, samples, seed, LinkQuantities::capacity);
  WeightedGraph g(net.size());
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = 0; j < net.size(); ++j)
      if (i != j && table.at(i, j).expected_capacity > 0.0)
        g.add_arc(i, j, (1.0 - net.rho(i)) * table.at(i, j).expected_capacity / 2.0);
  auto best = widest_path(g, source, dest);
  std::vector<LinkWeight> links;
  for (std::size_t k = 0; k + 1 < best.path.size(); ++k)
    links.push_back(table.at(best.path[k], best.path[k + 1]));
  return detail::make_route(Protocol::basmurf, net, std::move(best.path), std::move(links));
}

/// Most reliable single path: maximizes the product of link existence
/// probabilities (shortest path on -log P). Capacities of the chosen hops
/// are then estimated with the beam-aware model from the same draws.
inline RouteResult route_smurf(const NetworkBelief &net, std::size_t source, std::size_t dest,
                               std::size_t samples, std::uint64_t seed) {
  detail::check_endpoints(net, source, dest);
  const auto table = estimate_links(net, samples, seed, LinkQuantities::probability);
  WeightedGraph g(net.size());
  for (std::size_t i = 0; i < net.size(); ++i)
    for (std::size_t j = 0; j < net.size(); ++j)
      if (i != j && table.at(i, j).existence_probability > 0.0)
        g.add_arc(i, j, std::max(0.0, -std::log(table.at(i, j).existence_probability)));
  auto best = shortest_path(g, source, dest);
  if (best.value == 0.0)
    best = detail::certain_path(net, table, source, dest);
  std::vector<LinkWeight> links;
  for (std::size_t k = 0; k + 1 < best.path.size(); ++k)
    links.push_back(expected_link_capacity(net, best.path[k], best.path[k + 1], samples, seed));
  return detail::make_route(Protocol::smurf, net, std::move(best.path), std::move(links));
}

/// Distance-based routing on the estimated positions, uncertainty ignored.
/// Links exist when the estimated distance is below the maximum distance.
inline RouteResult route_dbr(const NetworkBelief &net, std::size_t source, std::size_t dest,
                             DbrMetric metric = DbrMetric::capacity) {
  detail::check_endpoints(net, source, dest);
  net.validate();
  const std::size_t n = net.size();
  const auto means = realization_of(net.swarm);
  LinkTable table(n);
  WeightedGraph g(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !(distance(means.positions[i], means.positions[j]) < net.channel.max_distance_m))
        continue;
      const auto interferers = interfering_hops(net, i, j);
      auto &w = table.at(i, j);
      w.expected_capacity = realized_capacity(means, aim_hop(net.swarm, i, j), interferers, net);
      w.existence_probability = 1.0;
      w.samples = 1;
      if (metric == DbrMetric::hop_count)
        g.add_arc(i, j, 1.0);
      else if (w.expected_capacity > 0.0)
        g.add_arc(i, j, (1.0 - net.rho(i)) * w.expected_capacity / 2.0);
    }
  auto best = metric == DbrMetric::hop_count ? min_hop_route(g, source, dest) : widest_path(g, source, dest);
  std::vector<LinkWeight> links;
  for (std::size_t k = 0; k + 1 < best.path.size(); ++k)
    links.push_back(table.at(best.path[k], best.path[k + 1]));
  return detail::make_route(Protocol::dbr, net, std::move(best.path), std::move(links));
}

struct RouteEvaluation {
  std::vector<double> hop_capacity; // bit/s, realized
  double throughput = 0.0;          // min over hops of (1 - rho) C / 2
};

/// Realized performance of a route on the true swarm state. Beams keep the
/// aims chosen at routing time. `others` are concurrently active routes;
/// those sharing a UAV with this one are TDMA-separated and do not interfere.
inline RouteEvaluation evaluate_route(const RouteResult &route, const SwarmRealization &truth,
                                      const NetworkBelief &net, std::span<const RouteResult> others = {}) {
  if (route.hops() == 0)
    throw InvalidArgument("route has no hops");
  std::vector<HopBeam> interferers;
  for (const auto &o : others)
    if (!share_uav(route, o))
      interferers.insert(interferers.end(), o.beams.begin(), o.beams.end());
  RouteEvaluation ev;
  ev.throughput = std::numeric_limits<double>::infinity();
  for (const auto &hop : route.beams) {
    const double c = realized_capacity(truth, hop, interferers, net);
    ev.hop_capacity.push_back(c);
    ev.throughput = std::min(ev.throughput, (1.0 - net.rho(hop.tx)) * c / 2.0);
  }
  return ev;
}

struct TdmaShares {
  std::vector<double> route_share; // min over the route's UAVs of 1/k
};

/// Each UAV carried by k routes gives each of them a 1/k share of its time.
inline TdmaShares tdma_share(std::span<const RouteResult> routes) {
  std::vector<std::size_t> load;
  for (const auto &r : routes)
    for (auto id : r.path) {
      if (load.size() <= id)
        load.resize(id + 1, 0);
      ++load[id];
    }
  TdmaShares out;
  for (const auto &r : routes) {
    double share = 1.0;
    for (auto id : r.path)
      share = std::min(share, 1.0 / static_cast<double>(load[id]));
    out.route_share.push_back(share);
  }
  return out;
}

/// Mean received power from the route's transmitters at every UAV off the
/// route, in dB over the noise floor. Bystanders listen omnidirectionally.
/// Negative infinity when nobody is off the route.
inline double interference_metric(const RouteResult &route, const SwarmRealization &truth,
                                  const NetworkBelief &net) {
  double total = 0.0;
  std::size_t victims = 0;
  for (std::size_t v = 0; v < truth.positions.size(); ++v) {
    if (route.contains(v))
      continue;
    ++victims;
    for (const auto &hop : route.beams) {
      const double d = distance(truth.positions[hop.tx], truth.positions[v]);
      if (d == 0.0)
        continue;
      const double h = steered_response(relative_angles(truth.positions[hop.tx], truth.attitudes[hop.tx],
                                                        truth.positions[v]),
                                        net.beam, hop.tx_aim, net.upa);
      total += received_power(detail::tx_amplitude(h, net), d, net.channel);
    }
  }
  if (victims == 0 || route.beams.empty())
    return -std::numeric_limits<double>::infinity();
  return to_db(total / static_cast<double>(victims) / net.channel.noise_power_w());
}

} // namespace fanet
