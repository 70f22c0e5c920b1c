#include "semba/model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

namespace semba::model {

using numeric::ContractError;
using numeric::DimensionError;
using numeric::LayerKind;
using numeric::LayerSpec;

namespace {

constexpr const char* kStateMagic = "semba-encoder-state";
constexpr int kStateVersion = 1;

std::string read_token(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) throw std::runtime_error(std::string("encoder state: truncated at ") + what);
  return token;
}

void expect_key(std::istream& in, const char* key) {
  if (read_token(in, key) != key) throw std::runtime_error(std::string("encoder state: expected '") + key + "'");
}

double read_double(std::istream& in, const char* what) { return numeric::detail::parse_hexfloat(read_token(in, what)); }

}  // namespace

std::vector<SignedMessage> aggregate_messages(std::span<const SignedMessage> messages) {
  std::map<std::pair<NodeId, int>, std::size_t> latest;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const auto& m = messages[i];
    auto [it, inserted] = latest.emplace(std::make_pair(m.target, m.slot), i);
    if (inserted) continue;
    const auto& cur = messages[it->second];
    if (m.time > cur.time || (m.time == cur.time && m.position >= cur.position)) it->second = i;
  }
  std::vector<SignedMessage> out;
  out.reserve(latest.size());
  for (const auto& [key, i] : latest) out.push_back(messages[i]);
  return out;
}

Encoder::Encoder(ParameterSet& params, EncoderConfig config)
    : config_(config), memory_(config.slot_count(), config.slot_width()), history_(config.history_cap) {
  config_.validate();
  const auto w = config_.slot_width();
  const auto md = config_.effective_message_dim();
  if (config_.slot_count() > 0) {
    const LayerSpec msg{LayerKind::feedforward, 2 * w + 2, md, md};
    if (config_.split_message_nets) {
      message_nets_.emplace_back(params, "msg_src", msg);
      message_nets_.emplace_back(params, "msg_dst", msg);
    } else {
      message_nets_.emplace_back(params, "msg", msg);
    }
    const LayerSpec cell{LayerKind::recurrent_cell, md, w};
    if (config_.slot_count() == 1 || config_.shared_memory_cell) {
      memory_cells_.emplace_back(params, "mem", cell);
    } else {
      memory_cells_.emplace_back(params, "mem_plus", cell);
      memory_cells_.emplace_back(params, "mem_minus", cell);
    }
  }
  if (config_.ablation.use_embedding_layer) {
    const auto nd = config_.node_dim();
    attention_ = numeric::MultiHeadAttention<double>(
        params, "embed.attn", LayerSpec{LayerKind::attention, nd, config_.embedding_dim, 0, config_.heads, numeric::Activation::relu, nd + 2});
    w1_ = params.add("embed.w1", config_.embedding_dim, nd, nd);
  }
}

const numeric::Feedforward<double>& Encoder::message_net(Role role) const {
  if (message_nets_.empty()) throw ContractError("encoder has no message net under -mem");
  return message_nets_.size() == 1 || role == Role::source ? message_nets_[0] : message_nets_[1];
}

const numeric::LstmCell<double>& Encoder::memory_cell(int slot) const {
  if (memory_cells_.empty()) throw ContractError("encoder has no memory cell under -mem");
  return memory_cells_.size() == 1 ? memory_cells_[0] : memory_cells_.at(static_cast<std::size_t>(slot));
}

void Encoder::reset() {
  memory_.reset();
  history_.reset();
  clock_ = 0.0;
  ingested_ = 0;
  pending_ = false;
}

void Encoder::set_features(Matrix features) {
  if (features.cols() != config_.feature_dim) throw DimensionError("node features must have feature_dim columns");
  if (!features.allFinite()) throw numeric::NumericError("node features contain NaN or Inf");
  features_ = std::move(features);
}

void Encoder::ensure(NodeId n) {
  memory_.ensure(n);
  history_.ensure(n);
}

int Encoder::partner_slot(int slot, const SignedEvent& e) const {
  if (config_.slot_count() < 2) return 0;
  // Same polarity across a positive link, opposite across a negative one.
  return e.positive() ? slot : 1 - slot;
}

double Encoder::edge_scalar(const SignedEvent& e) const {
  return config_.signed_edge_input ? e.weight : e.magnitude();
}

Vector Encoder::message_input(const SignedEvent& e, Role role, int slot) const {
  const NodeId u = role == Role::source ? e.src : e.dst;
  const NodeId v = role == Role::source ? e.dst : e.src;
  const auto w = config_.slot_width();
  const double last = u < memory_.node_count() ? memory_.last_update(u) : 0.0;
  Vector x(2 * w + 2);
  x.head(w) = memory_.memory(u, slot);
  x.segment(w, w) = memory_.memory(v, partner_slot(slot, e));
  x(2 * w) = std::log1p(std::max(0.0, e.time - last));
  x(2 * w + 1) = edge_scalar(e);
  return x;
}

std::vector<SignedMessage> Encoder::generate_messages(const ParameterSet& params, const SignedEvent& e,
                                                      std::size_t position) const {
  if (e.weight == 0.0) throw ContractError("message for a zero-weight event");
  std::vector<SignedMessage> out;
  Tape tape(false);
  for (int slot = 0; slot < config_.slot_count(); ++slot) {
    for (Role role : {Role::source, Role::destination}) {
      const auto x = message_input(e, role, slot);
      auto payload = message_net(role).apply(tape, params, tape.constant(x));
      out.push_back(SignedMessage{role == Role::source ? e.src : e.dst, slot, payload.value().col(0), e.time, position});
    }
  }
  return out;
}

void Encoder::update_memories(const ParameterSet& params, std::span<const SignedMessage> aggregated) {
  if (pending_) throw ContractError("update_memories() while an ingest awaits commit");
  std::map<std::pair<NodeId, int>, Vector> next;
  std::map<NodeId, double> times;
  Tape tape(false);
  for (const auto& m : aggregated) {
    if (m.slot < 0 || m.slot >= config_.slot_count()) throw ContractError("message for a memory slot that does not exist");
    if (m.payload.size() != config_.effective_message_dim()) throw DimensionError("message payload does not match the memory cell");
    if (!next.emplace(std::make_pair(m.target, m.slot), Vector()).second) throw ContractError("more than one message per (node, slot)");
    ensure(m.target + 1);
    const Matrix prior = memory_.cells(m.slot).row(m.target).transpose();
    next[{m.target, m.slot}] = memory_cell(m.slot).apply(tape, params, tape.constant(m.payload), tape.constant(prior)).value().col(0);
    auto [it, inserted] = times.emplace(m.target, m.time);
    if (!inserted) it->second = std::max(it->second, m.time);
  }
  // Every new state reads only pre-update memories, so the writes commute.
  for (const auto& [key, state] : next) memory_.cells(key.second).row(key.first) = state.transpose();
  for (const auto& [u, t] : times) memory_.set_last_update(u, t);
}

LiveMemory Encoder::ingest(Tape& tape, const ParameterSet& params, std::span<const SignedEvent> unordered, RoutingTrace* trace) {
  if (pending_) throw ContractError("ingest() before the previous batch was committed");
  LiveMemory live;
  if (unordered.empty()) return live;
  // Within a batch only event times matter; equal times keep their order.
  std::vector<SignedEvent> batch(unordered.begin(), unordered.end());
  std::stable_sort(batch.begin(), batch.end(), [](const SignedEvent& a, const SignedEvent& b) { return a.time < b.time; });
  if (batch.front().time < clock_) throw ContractError("batch starts before the last ingested event");
  NodeId top = 0;
  for (const auto& e : batch) {
    if (e.weight == 0.0) throw ContractError("zero-weight event reached the encoder");
    top = std::max({top, e.src, e.dst});
  }
  ensure(top + 1);

  // Aggregation keeps the latest message per (node, polarity), and every
  // event messages both polarities of both endpoints, so a node's aggregate
  // comes from the last event touching it. Only those inputs are evaluated.
  std::vector<Winner> winners;
  std::unordered_map<NodeId, std::size_t> where;
  for (std::size_t pos = 0; pos < batch.size(); ++pos) {
    const auto& e = batch[pos];
    for (Role role : {Role::source, Role::destination}) {
      const NodeId u = role == Role::source ? e.src : e.dst;
      if (role == Role::destination && e.dst == e.src) continue;
      auto [it, inserted] = where.emplace(u, winners.size());
      if (inserted)
        winners.push_back(Winner{u, pos, role});
      else
        winners[it->second] = Winner{u, pos, role};
    }
  }
  if (message_nets_.size() > 1)
    std::stable_partition(winners.begin(), winners.end(), [](const Winner& w) { return w.role == Role::source; });

  for (const auto& w : winners) {
    live.nodes.push_back(w.node);
    live.times.push_back(batch[w.position].time);
  }

  const auto slots = config_.slot_count();
  const auto width = config_.slot_width();
  const auto m = static_cast<Eigen::Index>(winners.size());
  for (int slot = 0; slot < slots; ++slot) {
    std::vector<Var> groups;
    Eigen::Index begin = 0;
    while (begin < m) {
      const Role role = message_nets_.size() > 1 ? winners[static_cast<std::size_t>(begin)].role : Role::source;
      Eigen::Index end = begin;
      while (end < m && (message_nets_.size() == 1 || winners[static_cast<std::size_t>(end)].role == role)) ++end;
      Matrix inputs(end - begin, 2 * width + 2);
      for (Eigen::Index i = begin; i < end; ++i) {
        const auto& w = winners[static_cast<std::size_t>(i)];
        const auto& e = batch[w.position];
        inputs.row(i - begin) = message_input(e, w.role, slot).transpose();
        if (trace) {
          trace->messages.push_back(MessageSource{w.node, slot, w.role == Role::source ? e.dst : e.src, partner_slot(slot, e),
                                                  w.role, w.position, e.time});
        }
      }
      groups.push_back(message_net(role).apply_rows(tape, params, tape.constant(std::move(inputs))));
      begin = end;
    }
    Var messages = groups.size() == 1 ? groups[0] : numeric::concat<double>(groups);
    Matrix prior(m, 2 * width);
    for (Eigen::Index i = 0; i < m; ++i) prior.row(i) = memory_.cells(slot).row(live.nodes[static_cast<std::size_t>(i)]);
    live.slots.push_back(memory_cell(slot).apply_rows(tape, params, messages, tape.constant(std::move(prior))));
  }

  for (const auto& e : batch) history_.append(e);
  clock_ = batch.back().time;
  ingested_ += batch.size();
  pending_ = true;
  return live;
}

void Encoder::commit(const LiveMemory& live) {
  for (std::size_t k = 0; k < live.slots.size(); ++k) {
    const Matrix& rows = live.slots[k].value();
    for (std::size_t i = 0; i < live.nodes.size(); ++i)
      memory_.cells(static_cast<int>(k)).row(live.nodes[i]) = rows.row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t i = 0; i < live.nodes.size(); ++i) memory_.set_last_update(static_cast<NodeId>(live.nodes[i]), live.times[i]);
  pending_ = false;
}

void Encoder::process_batch(const ParameterSet& params, std::span<const SignedEvent> batch, RoutingTrace* trace) {
  Tape tape(false);
  commit(ingest(tape, params, batch, trace));
}

Matrix Encoder::feature_rows(std::span<const Eigen::Index> nodes) const {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(nodes.size()), config_.feature_dim);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] < features_.rows()) out.row(static_cast<Eigen::Index>(i)) = features_.row(nodes[i]);
  return out;
}

Matrix Encoder::node_table() const {
  const auto n = static_cast<Eigen::Index>(memory_.node_count());
  const auto w = config_.slot_width();
  Matrix table(n, config_.node_dim());
  for (int k = 0; k < config_.slot_count(); ++k) table.middleCols(k * w, w) = memory_.cells(k).leftCols(w);
  if (config_.feature_dim > 0) {
    auto f = table.rightCols(config_.feature_dim);
    f.setZero();
    const auto rows = std::min(n, features_.rows());
    f.topRows(rows) = features_.topRows(rows);
  }
  return table;
}

Var Encoder::embed(Tape& tape, const ParameterSet& params, std::span<const NodeId> nodes, std::span<const double> times,
                   const LiveMemory* live, EmbeddingTrace* trace) {
  if (nodes.size() != times.size()) throw DimensionError("embed: nodes and times differ in length");
  NodeId top = -1;
  for (auto u : nodes) {
    if (u < 0) throw ContractError("embed: negative node id");
    top = std::max(top, u);
  }
  ensure(top + 1);

  Var table = tape.constant(node_table());
  if (live && !live->empty() && !live->slots.empty()) {
    const auto w = config_.slot_width();
    std::vector<Var> parts;
    for (const auto& s : live->slots) parts.push_back(numeric::slice_cols(s, 0, w));
    if (config_.feature_dim > 0) parts.push_back(tape.constant(feature_rows(live->nodes)));
    table = numeric::overwrite_rows(table, live->nodes, numeric::concat_cols<double>(parts));
  }
  Var hq = numeric::gather_rows(table, std::vector<Eigen::Index>(nodes.begin(), nodes.end()));
  if (!config_.ablation.use_embedding_layer) return numeric::slice_cols(hq, 0, config_.joint_memory_dim());

  std::vector<Eigen::Index> offsets{0};
  std::vector<Eigen::Index> neighbors;
  std::vector<double> extra;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& h : history_.entries_until(nodes[i], times[i])) {
      neighbors.push_back(h.neighbor);
      extra.push_back(std::log1p(std::max(0.0, times[i] - h.time)));
      extra.push_back(config_.signed_edge_input ? h.weight : std::abs(h.weight));
    }
    offsets.push_back(static_cast<Eigen::Index>(neighbors.size()));
  }
  const auto r = static_cast<Eigen::Index>(neighbors.size());
  Matrix extra_rows = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(extra.data(), r, 2);
  Var keys = numeric::concat_cols({numeric::gather_rows(table, neighbors), tape.constant(std::move(extra_rows))});
  auto att = attention_.apply_segments(tape, params, hq, keys, keys, offsets);
  if (trace) {
    trace->offsets = offsets;
    trace->neighbors.assign(neighbors.begin(), neighbors.end());
    trace->weights = att.weights;
  }
  return numeric::matmul_nt(hq, tape.parameter(params, w1_)) + att.output;
}

Matrix Encoder::embed_values(const ParameterSet& params, std::span<const NodeId> nodes, std::span<const double> times,
                             EmbeddingTrace* trace) {
  Tape tape(false);
  return embed(tape, params, nodes, times, nullptr, trace).value();
}

void Encoder::write_state(std::ostream& out) const {
  using numeric::detail::hexfloat;
  const auto n = memory_.node_count();
  out << kStateMagic << ' ' << kStateVersion << '\n';
  out << "slots " << memory_.slots() << " width " << memory_.width() << " nodes " << n << " clock " << hexfloat(clock_)
      << " ingested " << ingested_ << " cap " << history_.cap() << '\n';
  for (int k = 0; k < memory_.slots(); ++k) {
    const auto& c = memory_.cells(k);
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) out << (j ? " " : "") << hexfloat(c(r, j));
      out << '\n';
    }
  }
  out << "last_update";
  for (NodeId u = 0; u < n; ++u) out << ' ' << hexfloat(memory_.last_update(u));
  out << '\n';
  for (NodeId u = 0; u < history_.node_count(); ++u) {
    const auto list = history_.entries(u);
    out << "history " << u << ' ' << list.size();
    for (const auto& h : list) out << ' ' << h.neighbor << ' ' << hexfloat(h.time) << ' ' << hexfloat(h.weight);
    out << '\n';
  }
  out << "end\n";
}

void Encoder::read_state(std::istream& in) {
  if (read_token(in, "magic") != kStateMagic) throw std::runtime_error("not an encoder state snapshot");
  if (std::stoi(read_token(in, "version")) != kStateVersion) throw std::runtime_error("unsupported encoder state version");
  expect_key(in, "slots");
  const int slots = std::stoi(read_token(in, "slots"));
  expect_key(in, "width");
  const auto width = static_cast<Eigen::Index>(std::stol(read_token(in, "width")));
  expect_key(in, "nodes");
  const auto n = static_cast<NodeId>(std::stol(read_token(in, "nodes")));
  expect_key(in, "clock");
  const double clock = read_double(in, "clock");
  expect_key(in, "ingested");
  const auto ingested = static_cast<std::size_t>(std::stoull(read_token(in, "ingested")));
  expect_key(in, "cap");
  const auto cap = static_cast<std::size_t>(std::stoull(read_token(in, "cap")));
  if (slots != config_.slot_count() || width != config_.slot_width())
    throw DimensionError("encoder state snapshot does not match the model configuration");

  NodeMemoryState memory(slots, width);
  memory.ensure(n);
  for (int k = 0; k < slots; ++k)
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index j = 0; j < 2 * width; ++j) memory.cells(k)(r, j) = read_double(in, "memory");
  expect_key(in, "last_update");
  for (NodeId u = 0; u < n; ++u) memory.set_last_update(u, read_double(in, "last_update"));
  NeighborHistory history(cap);
  history.ensure(n);
  for (std::string key = read_token(in, "history"); key != "end"; key = read_token(in, "history")) {
    if (key != "history") throw std::runtime_error("encoder state: expected 'history'");
    const auto u = static_cast<NodeId>(std::stol(read_token(in, "node")));
    const auto count = std::stoull(read_token(in, "count"));
    for (unsigned long long i = 0; i < count; ++i) {
      const auto v = static_cast<NodeId>(std::stol(read_token(in, "neighbor")));
      const double t = read_double(in, "time");
      const double w = read_double(in, "weight");
      history.restore(u, HistoryEntry{v, t, w});
    }
  }
  memory_ = std::move(memory);
  history_ = std::move(history);
  clock_ = clock;
  ingested_ = ingested;
  pending_ = false;
}

}  // namespace semba::model
