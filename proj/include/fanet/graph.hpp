#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "fanet/errors.hpp"

namespace fanet {

/// Dense weighted graph on nodes 0..n-1. Arcs are directed; add_edge adds
/// both directions with the same weight.
class WeightedGraph {
public:
  explicit WeightedGraph(std::size_t n) : n_(n), w_(n * n, kAbsent) {}

  [[nodiscard]] std::size_t size() const noexcept { return n_; }

  void add_arc(std::size_t from, std::size_t to, double weight) {
    check(from);
    check(to);
    if (from == to)
      throw InvalidArgument("self loops are not allowed");
    if (std::isnan(weight))
      throw InvalidArgument("edge weight is NaN");
    w_[from * n_ + to] = weight;
  }

  void add_edge(std::size_t a, std::size_t b, double weight) {
    add_arc(a, b, weight);
    add_arc(b, a, weight);
  }

  [[nodiscard]] bool has(std::size_t from, std::size_t to) const { return !std::isnan(w_[from * n_ + to]); }
  [[nodiscard]] double weight(std::size_t from, std::size_t to) const { return w_[from * n_ + to]; }

  /// True when every arc has a reverse arc of equal weight.
  [[nodiscard]] bool symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double a = w_[i * n_ + j];
        const double b = w_[j * n_ + i];
        if (std::isnan(a) != std::isnan(b) || (!std::isnan(a) && a != b))
          return false;
      }
    return true;
  }

  void check(std::size_t v) const {
    if (v >= n_)
      throw InvalidArgument("node " + std::to_string(v) + " not in graph");
  }

private:
  static constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_;
  std::vector<double> w_;
};

struct PathResult {
  std::vector<std::size_t> path;
  double value = 0.0; // bottleneck weight or total cost
};

inline double path_bottleneck(const WeightedGraph &g, const std::vector<std::size_t> &path) {
  double b = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < path.size(); ++k)
    b = std::min(b, g.weight(path[k], path[k + 1]));
  return b;
}

namespace detail {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v)
      v = parent[v] = parent[parent[v]];
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b)
      return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<std::size_t> parent;
};

// Fewest-hop, then lexicographically smallest, path using only arcs that
// pass `keep`. Empty when t is unreachable.
inline std::vector<std::size_t> min_hop_path(const WeightedGraph &g, std::size_t s, std::size_t t,
                                             const std::function<bool(std::size_t, std::size_t)> &keep) {
  const std::size_t n = g.size();
  constexpr auto kInf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> hops(n, kInf);
  std::queue<std::size_t> q;
  hops[t] = 0;
  q.push(t);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (std::size_t u = 0; u < n; ++u)
      if (u != v && hops[u] == kInf && g.has(u, v) && keep(u, v)) {
        hops[u] = hops[v] + 1;
        q.push(u);
      }
  }
  if (hops[s] == kInf)
    return {};
  std::vector<std::size_t> path{s};
  for (std::size_t u = s; u != t;) {
    for (std::size_t v = 0; v < n; ++v)
      if (v != u && g.has(u, v) && keep(u, v) && hops[v] + 1 == hops[u]) {
        u = v;
        break;
      }
    path.push_back(u);
  }
  return path;
}

// Source-to-dest path in the maximum spanning forest of a symmetric graph.
inline std::vector<std::size_t> spanning_tree_path(const WeightedGraph &g, std::size_t s, std::size_t t) {
  const std::size_t n = g.size();
  std::vector<std::tuple<double, std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (g.has(i, j))
        edges.emplace_back(g.weight(i, j), i, j);
  std::stable_sort(edges.begin(), edges.end(),
                   [](const auto &a, const auto &b) { return std::get<0>(a) > std::get<0>(b); });

  DisjointSets sets(n);
  std::vector<std::vector<std::size_t>> tree(n);
  for (const auto &[w, i, j] : edges)
    if (sets.unite(i, j)) {
      tree[i].push_back(j);
      tree[j].push_back(i);
    }
  if (sets.find(s) != sets.find(t))
    return {};

  std::vector<std::size_t> parent(n, n);
  std::vector<std::size_t> stack{s};
  parent[s] = s;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto u : tree[v])
      if (parent[u] == n) {
        parent[u] = v;
        stack.push_back(u);
      }
  }
  std::vector<std::size_t> path{t};
  while (path.back() != s)
    path.push_back(parent[path.back()]);
  std::reverse(path.begin(), path.end());
  return path;
}

// Largest threshold w such that t is reachable from s over arcs >= w.
inline std::optional<double> directed_bottleneck(const WeightedGraph &g, std::size_t s, std::size_t t) {
  std::vector<double> levels;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (i != j && g.has(i, j))
        levels.push_back(g.weight(i, j));
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto reachable = [&](double w) {
    return !min_hop_path(g, s, t, [&](std::size_t a, std::size_t b) { return g.weight(a, b) >= w; }).empty();
  };
  if (levels.empty() || !reachable(levels.back()))
    return std::nullopt;
  // Reachability is monotone in the threshold: find the first level that works.
  std::size_t lo = 0, hi = levels.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (reachable(levels[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return levels[lo];
}

} // namespace detail

/// Maximum-bottleneck path from s to t. The optimal bottleneck comes from the
/// maximum spanning tree (symmetric graphs) or a threshold search (directed
/// graphs). Among paths achieving it, the one with fewest hops and then the
/// lexicographically smallest id sequence is returned.
inline PathResult widest_path(const WeightedGraph &g, std::size_t s, std::size_t t) {
  g.check(s);
  g.check(t);
  if (s == t)
    throw InvalidArgument("source and destination must differ");
  double best;
  if (g.symmetric()) {
    const auto tree_path = detail::spanning_tree_path(g, s, t);
    if (tree_path.empty())
      throw DisconnectedError(s, t);
    best = path_bottleneck(g, tree_path);
  } else {
    const auto b = detail::directed_bottleneck(g, s, t);
    if (!b)
      throw DisconnectedError(s, t);
    best = *b;
  }
  auto path = detail::min_hop_path(g, s, t, [&](std::size_t a, std::size_t b) { return g.weight(a, b) >= best; });
  return {std::move(path), best};
}

/// Fewest-hop path, ties broken by the lexicographically smallest sequence.
inline PathResult min_hop_route(const WeightedGraph &g, std::size_t s, std::size_t t) {
  g.check(s);
  g.check(t);
  if (s == t)
    throw InvalidArgument("source and destination must differ");
  auto path = detail::min_hop_path(g, s, t, [](std::size_t, std::size_t) { return true; });
  if (path.empty())
    throw DisconnectedError(s, t);
  const double hops = static_cast<double>(path.size() - 1);
  return {std::move(path), hops};
}

/// Minimum total cost path for nonnegative arc costs; ties go to fewer hops,
/// then to the lexicographically smallest sequence.
inline PathResult shortest_path(const WeightedGraph &g, std::size_t s, std::size_t t) {
  g.check(s);
  g.check(t);
  if (s == t)
    throw InvalidArgument("source and destination must differ");
  const std::size_t n = g.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && g.has(i, j) && !(g.weight(i, j) >= 0.0))
        throw InvalidArgument("shortest_path needs nonnegative costs");

  // Dijkstra towards t over reversed arcs, keyed by (cost, hops).
  using Key = std::pair<double, std::size_t>;
  const Key inf{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
  std::vector<Key> key(n, inf);
  std::vector<bool> done(n, false);
  key[t] = {0.0, 0};
  for (std::size_t round = 0; round < n; ++round) {
    std::size_t v = n;
    for (std::size_t u = 0; u < n; ++u)
      if (!done[u] && key[u] != inf && (v == n || key[u] < key[v]))
        v = u;
    if (v == n)
      break;
    done[v] = true;
    for (std::size_t u = 0; u < n; ++u)
      if (!done[u] && u != v && g.has(u, v)) {
        const Key cand{key[v].first + g.weight(u, v), key[v].second + 1};
        if (cand < key[u])
          key[u] = cand;
      }
  }
  if (key[s] == inf)
    throw DisconnectedError(s, t);

  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); };
  std::vector<std::size_t> path{s};
  for (std::size_t u = s; u != t;) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n && next == n; ++v)
      if (v != u && g.has(u, v) && key[v] != inf && key[v].second + 1 == key[u].second &&
          close(key[v].first + g.weight(u, v), key[u].first))
        next = v;
    if (next == n)
      throw Error("shortest_path reconstruction failed");
    u = next;
    path.push_back(u);
  }
  return {std::move(path), key[s].first};
}

} // namespace fanet
