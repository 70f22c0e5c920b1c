#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace semba::events {

using NodeId = std::int32_t;

/// Malformed, missing or empty input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One timestamped directed link addition with a signed, non-zero weight.
struct SignedEvent {
  double time = 0.0;
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 0.0;

  bool positive() const { return weight > 0.0; }
  double magnitude() const { return weight < 0.0 ? -weight : weight; }
  friend bool operator==(const SignedEvent&, const SignedEvent&) = default;
};

class EventView;

// Time-ordered event stream with dense node ids. Ids are assigned in order of
// first appearance, so the nodes seen in any prefix of the stream are exactly
// [0, k) for some k. Immutable after construction.
class EventLog {
 public:
  EventLog() = default;

  // Takes events with dense ids already assigned. Throws DataError if times
  // decrease, a weight is zero or an id is out of range.
  EventLog(std::vector<SignedEvent> events, std::vector<std::string> raw_ids);

  // Convenience for generated streams: raw ids become "0", "1", ...
  static EventLog from_dense(std::vector<SignedEvent> events, NodeId node_count);

  std::span<const SignedEvent> events() const { return events_; }
  const SignedEvent& operator[](std::size_t i) const { return events_.at(i); }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  NodeId node_count() const { return static_cast<NodeId>(raw_ids_.size()); }

  const std::string& raw_id(NodeId id) const { return raw_ids_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& raw_ids() const { return raw_ids_; }
  std::optional<NodeId> lookup(const std::string& raw) const;

  EventView view() const;
  EventView slice(std::size_t begin, std::size_t end) const;

  friend bool operator==(const EventLog& a, const EventLog& b) {
    return a.events_ == b.events_ && a.raw_ids_ == b.raw_ids_;
  }

 private:
  std::vector<SignedEvent> events_;
  std::vector<std::string> raw_ids_;
  std::unordered_map<std::string, NodeId> by_raw_;
};

/// Contiguous [begin, end) range of an EventLog, in global event indices.
class EventView {
 public:
  EventView() = default;
  EventView(const EventLog* log, std::size_t begin, std::size_t end);

  const EventLog& log() const { return *log_; }
  std::size_t begin_index() const { return begin_; }
  std::size_t end_index() const { return end_; }
  std::size_t size() const { return end_ - begin_; }
  bool empty() const { return begin_ == end_; }
  std::span<const SignedEvent> events() const { return log_->events().subspan(begin_, end_ - begin_); }
  const SignedEvent& operator[](std::size_t i) const { return events()[i]; }

 private:
  const EventLog* log_ = nullptr;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
};

/// At most B consecutive events; begin/end are global indices into the log.
struct TemporalBatch {
  std::size_t index = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double start_time = 0.0;
  double end_time = 0.0;
  std::span<const SignedEvent> events;

  std::size_t size() const { return events.size(); }
};

// Consecutive disjoint slices of size batch_size covering the view in order;
// the last one may be shorter.
std::vector<TemporalBatch> batches(const EventView& view, std::size_t batch_size);

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

struct DatasetSplit {
  EventView train;
  EventView validation;
  EventView test;
  SplitFractions fractions;
};

// Boundaries at floor(cumulative fraction * n). Ties in time that straddle a
// boundary are split by index, never regrouped.
DatasetSplit chronological_split(const EventLog& log, SplitFractions fractions = {});

}  // namespace semba::events
