#include "semba/events/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace semba::events {

FactionStream balanced_faction_stream(const FactionStreamOptions& options) {
  if (options.nodes < 2) throw std::invalid_argument("faction stream needs at least 2 nodes");
  if (options.events == 0) throw std::invalid_argument("faction stream needs at least 1 event");
  std::mt19937_64 rng(options.seed);
  const auto n = static_cast<std::size_t>(options.nodes);
  std::vector<int> raw_faction(n);
  for (std::size_t i = 0; i < n; ++i) raw_faction[i] = i % 2 == 0 ? 1 : -1;
  std::shuffle(raw_faction.begin(), raw_faction.end(), rng);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::bernoulli_distribution within(options.within_fraction);
  std::exponential_distribution<double> gap(1.0 / options.mean_gap);

  std::vector<NodeId> dense(n, -1);
  std::vector<std::string> raw_ids;
  FactionStream out;
  auto densify = [&](std::size_t raw) {
    if (dense[raw] < 0) {
      dense[raw] = static_cast<NodeId>(raw_ids.size());
      raw_ids.push_back(std::to_string(raw));
      out.faction.push_back(raw_faction[raw]);
    }
    return dense[raw];
  };

  if (options.closure_fraction < 0 || options.repeat_fraction < 0 || options.closure_fraction + options.repeat_fraction > 1)
    throw std::invalid_argument("closure and repeat fractions must be non-negative and sum to at most 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<std::size_t>> recent(n);  // newest last
  auto remember = [&](std::size_t a, std::size_t b) {
    auto& r = recent[a];
    r.erase(std::remove(r.begin(), r.end(), b), r.end());
    r.push_back(b);
    if (r.size() > std::max<std::size_t>(options.recent_window, 1)) r.erase(r.begin());
  };
  auto any_of = [&](const std::vector<std::size_t>& r) { return r[std::uniform_int_distribution<std::size_t>(0, r.size() - 1)(rng)]; };

  std::vector<SignedEvent> events;
  events.reserve(options.events);
  double t = 0.0;
  while (events.size() < options.events) {
    const std::size_t u = pick(rng);
    const double draw = unit(rng);
    std::size_t v = u;
    if (draw < options.repeat_fraction && !recent[u].empty()) {
      v = any_of(recent[u]);
    } else if (draw < options.repeat_fraction + options.closure_fraction && !recent[u].empty()) {
      std::vector<std::size_t> ends;  // every x with a recent wedge u-w-x
      for (std::size_t w : recent[u])
        for (std::size_t x : recent[w])
          if (x != u) ends.push_back(x);
      if (!ends.empty()) v = any_of(ends);
    }
    if (v == u) {
      const bool same = within(rng);
      v = pick(rng);
      while (v == u || (raw_faction[u] == raw_faction[v]) != same) v = pick(rng);
    }
    remember(u, v);
    remember(v, u);
    t += gap(rng);
    const double sign = raw_faction[u] * raw_faction[v];
    events.push_back(SignedEvent{t, densify(u), densify(v), sign});
  }
  out.log = EventLog(std::move(events), std::move(raw_ids));
  return out;
}

}  // namespace semba::events
