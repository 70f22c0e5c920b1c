#pragma once

#include "semba/events/event_log.hpp"
#include "semba/numeric.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace semba::model {

using events::NodeId;
using events::SignedEvent;

// Columnar per-node memory. Slot k of node u is the packed recurrent state
// [h; c] in row u of cells[k]; h is the memory vector itself (s+ for slot 0,
// s- for slot 1). Every row starts at zero with last_update 0.
class NodeMemoryState {
 public:
  NodeMemoryState() = default;
  NodeMemoryState(int slots, Eigen::Index width);

  int slots() const { return static_cast<int>(cells_.size()); }
  Eigen::Index width() const { return width_; }
  NodeId node_count() const { return static_cast<NodeId>(last_update_.size()); }

  // Grows the store so that ids [0, n) exist; new rows are zero.
  void ensure(NodeId n);
  void reset();

  const Matrix& cells(int slot) const { return cells_.at(static_cast<std::size_t>(slot)); }
  Matrix& cells(int slot) { return cells_.at(static_cast<std::size_t>(slot)); }
  // Memory vector of one slot (the h half), e.g. memory(u, 0) = s+_u.
  Vector memory(NodeId u, int slot) const;
  // s+ (+) s- (or the single -BA memory); empty under -mem.
  Vector joint(NodeId u) const;

  double last_update(NodeId u) const { return last_update_.at(static_cast<std::size_t>(u)); }
  void set_last_update(NodeId u, double t) { last_update_.at(static_cast<std::size_t>(u)) = t; }

  friend bool operator==(const NodeMemoryState& a, const NodeMemoryState& b) {
    return a.width_ == b.width_ && a.cells_ == b.cells_ && a.last_update_ == b.last_update_;
  }

 private:
  Eigen::Index width_ = 0;
  std::vector<Matrix> cells_;
  std::vector<double> last_update_;
};

struct HistoryEntry {
  NodeId neighbor = 0;
  double time = 0.0;
  double weight = 0.0;  // signed; the encoder decides whether to use |e|

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

// Per-node append-only interaction log. Both endpoints of every event get an
// entry, so each list is time-ordered. With a cap only the newest `cap`
// entries are kept.
class NeighborHistory {
 public:
  explicit NeighborHistory(std::size_t cap = 0) : cap_(cap) {}

  void ensure(NodeId n);
  void reset();
  void append(const SignedEvent& e);
  // One-sided append for snapshot restore; entries must arrive time-ordered.
  void restore(NodeId u, HistoryEntry entry);

  std::span<const HistoryEntry> entries(NodeId u) const;
  // Entries with time <= t.
  std::span<const HistoryEntry> entries_until(NodeId u, double t) const;
  std::size_t cap() const { return cap_; }
  NodeId node_count() const { return static_cast<NodeId>(lists_.size()); }
  std::size_t total_entries() const;

  friend bool operator==(const NeighborHistory& a, const NeighborHistory& b) { return a.lists_ == b.lists_ && a.cap_ == b.cap_; }

 private:
  void push(NodeId u, HistoryEntry entry);

  std::size_t cap_ = 0;
  std::vector<std::vector<HistoryEntry>> lists_;
};

}  // namespace semba::model
