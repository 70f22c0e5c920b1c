#include "semba/events/event_log.hpp"

#include <algorithm>
#include <cmath>

namespace semba::events {

EventLog::EventLog(std::vector<SignedEvent> events, std::vector<std::string> raw_ids)
    : events_(std::move(events)), raw_ids_(std::move(raw_ids)) {
  const auto n = static_cast<NodeId>(raw_ids_.size());
  for (std::size_t i = 0; i < raw_ids_.size(); ++i) {
    if (!by_raw_.emplace(raw_ids_[i], static_cast<NodeId>(i)).second)
      throw DataError("duplicate raw node id '" + raw_ids_[i] + "'");
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (e.weight == 0.0 || !std::isfinite(e.weight)) throw DataError("event " + std::to_string(i) + " has zero or non-finite weight");
    if (!std::isfinite(e.time) || e.time < 0.0) throw DataError("event " + std::to_string(i) + " has an invalid time");
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) throw DataError("event " + std::to_string(i) + " has an id out of range");
    if (i > 0 && e.time < events_[i - 1].time) throw DataError("events are not in chronological order at index " + std::to_string(i));
  }
}

EventLog EventLog::from_dense(std::vector<SignedEvent> events, NodeId node_count) {
  std::vector<std::string> raw;
  raw.reserve(static_cast<std::size_t>(node_count));
  for (NodeId i = 0; i < node_count; ++i) raw.push_back(std::to_string(i));
  return EventLog(std::move(events), std::move(raw));
}

std::optional<NodeId> EventLog::lookup(const std::string& raw) const {
  auto it = by_raw_.find(raw);
  if (it == by_raw_.end()) return std::nullopt;
  return it->second;
}

EventView EventLog::view() const { return EventView(this, 0, events_.size()); }

EventView EventLog::slice(std::size_t begin, std::size_t end) const { return EventView(this, begin, end); }

EventView::EventView(const EventLog* log, std::size_t begin, std::size_t end) : log_(log), begin_(begin), end_(end) {
  if (!log || begin > end || end > log->size()) throw std::out_of_range("EventView range outside the log");
}

std::vector<TemporalBatch> batches(const EventView& view, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  std::vector<TemporalBatch> out;
  const auto all = view.events();
  for (std::size_t offset = 0; offset < all.size(); offset += batch_size) {
    const std::size_t count = std::min(batch_size, all.size() - offset);
    TemporalBatch b;
    b.index = out.size();
    b.begin = view.begin_index() + offset;
    b.end = b.begin + count;
    b.events = all.subspan(offset, count);
    b.start_time = b.events.front().time;
    b.end_time = b.events.back().time;
    out.push_back(b);
  }
  return out;
}

DatasetSplit chronological_split(const EventLog& log, SplitFractions fractions) {
  if (fractions.train < 0 || fractions.validation < 0 || fractions.test < 0 ||
      std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  const double n = static_cast<double>(log.size());
  // The 1e-9 slack keeps e.g. 0.85 * 100 from flooring to 84.
  const auto first = static_cast<std::size_t>(std::floor(fractions.train * n + 1e-9));
  const auto second = static_cast<std::size_t>(std::floor((fractions.train + fractions.validation) * n + 1e-9));
  DatasetSplit split{log.slice(0, first), log.slice(first, second), log.slice(second, log.size()), fractions};
  if (split.train.empty() || split.validation.empty() || split.test.empty())
    throw DataError("chronological split produced an empty part (" + std::to_string(log.size()) + " events)");
  return split;
}

}  // namespace semba::events
