#pragma once

#include "semba/events/event_log.hpp"

#include <cstdint>
#include <vector>

namespace semba::events {

struct FactionStreamOptions {
  NodeId nodes = 500;
  std::size_t events = 10000;
  std::uint64_t seed = 7;
  double mean_gap = 60.0;  // exponential inter-event time
  // Probability an event links two members of the same faction.
  double within_fraction = 0.5;
  // Probability an event closes a wedge u-w-v through a recent partner w of u,
  // and probability it repeats a recent pair. The remainder pick v at random.
  double closure_fraction = 0.0;
  double repeat_fraction = 0.0;
  std::size_t recent_window = 8;  // partners remembered per node
};

struct FactionStream {
  EventLog log;
  std::vector<int> faction;  // +1 or -1 per dense id
};

// Two factions; every link's sign is the product of its endpoints' faction
// labels, so every triangle is balanced. Dense ids follow first appearance,
// and faction[] is indexed by dense id.
FactionStream balanced_faction_stream(const FactionStreamOptions& options);

}  // namespace semba::events
