#include "semba/events/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace semba::events {

PairSigns collapse_latest_sign(std::span<const SignedEvent> events) {
  PairSigns out;
  for (const auto& e : events) out[{e.src, e.dst}] = e.positive() ? 1 : -1;
  return out;
}

PairSigns collapse_undirected(std::span<const SignedEvent> events) {
  PairSigns out;
  for (const auto& e : events) {
    if (e.src == e.dst) continue;
    out[{std::min(e.src, e.dst), std::max(e.src, e.dst)}] = e.positive() ? 1 : -1;
  }
  return out;
}

DatasetStats compute_stats(const EventLog& log) {
  if (log.empty()) throw DataError("cannot compute statistics of an empty log");
  DatasetStats s;
  s.nodes = static_cast<std::size_t>(log.node_count());
  s.events = log.size();

  const auto directed = collapse_latest_sign(log.events());
  std::size_t positive = 0;
  for (const auto& [pair, sign] : directed) positive += sign > 0 ? 1 : 0;
  s.f_plus = static_cast<double>(positive) / static_cast<double>(directed.size());

  // Forward adjacency on degree order: each triangle is found exactly once
  // from its lowest-ranked vertex.
  const auto undirected = collapse_undirected(log.events());
  s.links = undirected.size();
  const auto n = static_cast<std::size_t>(log.node_count());
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [pair, sign] : undirected) {
    ++degree[static_cast<std::size_t>(pair.first)];
    ++degree[static_cast<std::size_t>(pair.second)];
  }
  auto before = [&](NodeId a, NodeId b) {
    const auto da = degree[static_cast<std::size_t>(a)], db = degree[static_cast<std::size_t>(b)];
    return da != db ? da < db : a < b;
  };
  std::vector<std::vector<std::pair<NodeId, int>>> forward(n);
  for (const auto& [pair, sign] : undirected) {
    auto [a, b] = pair;
    if (!before(a, b)) std::swap(a, b);
    forward[static_cast<std::size_t>(a)].emplace_back(b, sign);
  }
  for (auto& list : forward) std::sort(list.begin(), list.end());

  std::vector<int> mark(n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, suv] : forward[u]) mark[static_cast<std::size_t>(v)] = suv;
    for (const auto& [v, suv] : forward[u]) {
      for (const auto& [w, svw] : forward[static_cast<std::size_t>(v)]) {
        const int suw = mark[static_cast<std::size_t>(w)];
        if (suw == 0) continue;
        ++s.triangles;
        if (suv * svw * suw < 0) ++s.unbalanced_triangles;
      }
    }
    for (const auto& [v, suv] : forward[u]) mark[static_cast<std::size_t>(v)] = 0;
  }
  s.no_triangles = s.triangles == 0;
  s.f_ub = s.no_triangles ? 0.0 : static_cast<double>(s.unbalanced_triangles) / static_cast<double>(s.triangles);

  const auto ev = log.events();
  s.raw_span = ev.back().time - ev.front().time;
  s.days = std::round(s.raw_span / 86400.0);
  return s;
}

}  // namespace semba::events
