#pragma once

#include "semba/events/event_log.hpp"

#include <cstdint>
#include <map>
#include <utility>

namespace semba::events {

struct DatasetStats {
  std::size_t nodes = 0;
  std::size_t events = 0;  // rows kept after filtering
  std::size_t links = 0;   // distinct unordered node pairs
  double f_plus = 0.0;
  double f_ub = 0.0;
  double days = 0.0;      // round((max time - min time) / 86400)
  double raw_span = 0.0;  // max time - min time, native units
  std::uint64_t triangles = 0;
  std::uint64_t unbalanced_triangles = 0;
  bool no_triangles = false;
};

using PairSigns = std::map<std::pair<NodeId, NodeId>, int>;

// Latest sign per ordered pair; a later event overwrites an earlier one.
PairSigns collapse_latest_sign(std::span<const SignedEvent> events);

// Same rule on unordered pairs {min, max}; reciprocal edges resolve to the
// later event. Self-loops are ignored.
PairSigns collapse_undirected(std::span<const SignedEvent> events);

// f_plus over directed latest-sign pairs; f_ub over triangles of the
// undirected latest-sign graph, a triangle being unbalanced iff its sign
// product is negative. Throws DataError on an empty log.
DatasetStats compute_stats(const EventLog& log);

}  // namespace semba::events
