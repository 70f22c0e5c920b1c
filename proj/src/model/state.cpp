#include "semba/model/state.hpp"

#include <algorithm>

namespace semba::model {

NodeMemoryState::NodeMemoryState(int slots, Eigen::Index width) : width_(width) {
  if (slots < 0 || width < 0) throw std::invalid_argument("memory state: negative size");
  cells_.assign(static_cast<std::size_t>(slots), Matrix(0, 2 * width));
}

void NodeMemoryState::ensure(NodeId n) {
  if (n <= node_count()) return;
  const auto old = static_cast<Eigen::Index>(node_count());
  for (auto& c : cells_) {
    c.conservativeResize(n, 2 * width_);
    c.bottomRows(n - old).setZero();
  }
  last_update_.resize(static_cast<std::size_t>(n), 0.0);
}

void NodeMemoryState::reset() {
  for (auto& c : cells_) c.resize(0, 2 * width_);
  last_update_.clear();
}

Vector NodeMemoryState::memory(NodeId u, int slot) const {
  if (u < 0 || u >= node_count()) return Vector::Zero(width_);
  return cells(slot).row(u).head(width_).transpose();
}

Vector NodeMemoryState::joint(NodeId u) const {
  Vector out(slots() * width_);
  for (int k = 0; k < slots(); ++k) out.segment(k * width_, width_) = memory(u, k);
  return out;
}

void NeighborHistory::ensure(NodeId n) {
  if (n > node_count()) lists_.resize(static_cast<std::size_t>(n));
}

void NeighborHistory::reset() { lists_.clear(); }

void NeighborHistory::push(NodeId u, HistoryEntry entry) {
  auto& list = lists_[static_cast<std::size_t>(u)];
  list.push_back(entry);
  if (cap_ > 0 && list.size() > cap_) list.erase(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(list.size() - cap_));
}

void NeighborHistory::append(const SignedEvent& e) {
  ensure(std::max(e.src, e.dst) + 1);
  push(e.src, {e.dst, e.time, e.weight});
  if (e.dst != e.src) push(e.dst, {e.src, e.time, e.weight});
}

void NeighborHistory::restore(NodeId u, HistoryEntry entry) {
  ensure(std::max(u, entry.neighbor) + 1);
  const auto& list = lists_[static_cast<std::size_t>(u)];
  if (!list.empty() && entry.time < list.back().time) throw std::invalid_argument("history entries out of time order");
  push(u, entry);
}

std::span<const HistoryEntry> NeighborHistory::entries(NodeId u) const {
  if (u < 0 || u >= node_count()) return {};
  return lists_[static_cast<std::size_t>(u)];
}

std::span<const HistoryEntry> NeighborHistory::entries_until(NodeId u, double t) const {
  auto all = entries(u);
  auto end = std::upper_bound(all.begin(), all.end(), t, [](double v, const HistoryEntry& h) { return v < h.time; });
  return all.first(static_cast<std::size_t>(end - all.begin()));
}

std::size_t NeighborHistory::total_entries() const {
  std::size_t n = 0;
  for (const auto& l : lists_) n += l.size();
  return n;
}

}  // namespace semba::model
