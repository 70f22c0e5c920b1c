#pragma once

#include "semba/model/config.hpp"
#include "semba/model/state.hpp"
#include "semba/numeric.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace semba::model {

inline constexpr int kPlus = 0;
inline constexpr int kMinus = 1;

enum class Role { source, destination };

struct SignedMessage {
  NodeId target = 0;
  int slot = kPlus;  // polarity; always 0 under -BA
  Vector payload;
  double time = 0.0;
  std::size_t position = 0;  // index of the producing event within its batch
};

// Where one (node, slot) message input read its memories from.
struct MessageSource {
  NodeId target = 0;
  int slot = 0;
  NodeId partner = 0;
  int partner_slot = 0;
  Role role = Role::source;
  std::size_t position = 0;  // winning event within the time-ordered batch
  double time = 0.0;
};

struct RoutingTrace {
  std::vector<MessageSource> messages;  // one per updated (node, slot)
};

// Memory rows computed on a tape but not yet written back. slots[k] holds the
// new packed state of nodes[i] in row i.
struct LiveMemory {
  std::vector<Eigen::Index> nodes;
  std::vector<Var> slots;
  std::vector<double> times;

  bool empty() const { return nodes.empty(); }
};

struct EmbeddingTrace {
  std::vector<Eigen::Index> offsets;  // query i attends over rows [offsets[i], offsets[i+1])
  std::vector<NodeId> neighbors;
  Matrix weights;                     // rows x heads
};

// Most recent message per (target, slot): greatest time, ties to the later
// batch position. Output ordered by (target, slot).
std::vector<SignedMessage> aggregate_messages(std::span<const SignedMessage> messages);

// Signed memories with balance-routed messages and attention embeddings.
// Parameters live in a caller-owned ParameterSet; the encoder stores layer
// indices and the mutable stream state (memories, histories, clock).
class Encoder {
 public:
  Encoder(ParameterSet& params, EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  const NodeMemoryState& memory() const { return memory_; }
  const NeighborHistory& history() const { return history_; }
  // Time of the newest ingested event and the number of events ingested.
  double clock() const { return clock_; }
  std::size_t ingested() const { return ingested_; }
  NodeId node_count() const { return memory_.node_count(); }

  // Empty graph: zero memories, empty histories, clock 0.
  void reset();
  // Optional node features (rows indexed by dense id, feature_dim columns);
  // nodes without a row get zeros.
  void set_features(Matrix features);
  void ensure(NodeId n);

  // The per-event message rule, evaluated directly: two messages per slot,
  // one for each endpoint, read from the current committed state.
  std::vector<SignedMessage> generate_messages(const ParameterSet& params, const SignedEvent& e,
                                               std::size_t position = 0) const;

  // Applies aggregated messages (one per (node, slot)) directly to the
  // committed state: s^slot <- mem(M, s^slot); last_update <- message time.
  // Slots without a message are left untouched. No history is appended.
  void update_memories(const ParameterSet& params, std::span<const SignedMessage> aggregated);

  // Message, aggregation and memory steps for one batch, recorded on tape.
  // The history is appended immediately; memories change only at commit().
  // Events are taken in time order (equal times keep their given order), so
  // permuting a tie-free batch changes nothing. Throws ContractError if any
  // event precedes the clock.
  LiveMemory ingest(Tape& tape, const ParameterSet& params, std::span<const SignedEvent> batch,
                    RoutingTrace* trace = nullptr);
  void commit(const LiveMemory& live);
  // ingest + commit without gradients.
  void process_batch(const ParameterSet& params, std::span<const SignedEvent> batch, RoutingTrace* trace = nullptr);

  // z for each (nodes[i], times[i]) from the committed state overlaid with
  // `live`, m x output_dim. Unknown ids get zero state.
  Var embed(Tape& tape, const ParameterSet& params, std::span<const NodeId> nodes, std::span<const double> times,
            const LiveMemory* live = nullptr, EmbeddingTrace* trace = nullptr);
  Matrix embed_values(const ParameterSet& params, std::span<const NodeId> nodes, std::span<const double> times,
                      EmbeddingTrace* trace = nullptr);

  // Layer access for tests and tools.
  const numeric::Feedforward<double>& message_net(Role role) const;
  const numeric::LstmCell<double>& memory_cell(int slot) const;
  const numeric::MultiHeadAttention<double>& attention() const { return attention_; }
  std::size_t w1() const { return w1_; }

  // Snapshot of memories, histories and clock with a version header.
  void write_state(std::ostream& out) const;
  void read_state(std::istream& in);

 private:
  struct Winner {
    NodeId node;
    std::size_t position;
    Role role;
  };

  int partner_slot(int slot, const SignedEvent& e) const;
  double edge_scalar(const SignedEvent& e) const;
  // [s_u^slot, s_v^routed, log1p(dt_u), |e|] from the committed state.
  Vector message_input(const SignedEvent& e, Role role, int slot) const;
  Matrix node_table() const;
  Matrix feature_rows(std::span<const Eigen::Index> nodes) const;

  EncoderConfig config_;
  std::vector<numeric::Feedforward<double>> message_nets_;  // [shared] or [source, destination]
  std::vector<numeric::LstmCell<double>> memory_cells_;     // one per slot, or one shared
  numeric::MultiHeadAttention<double> attention_;
  std::size_t w1_ = 0;

  NodeMemoryState memory_;
  NeighborHistory history_;
  Matrix features_;
  double clock_ = 0.0;
  std::size_t ingested_ = 0;
  bool pending_ = false;  // an ingest awaits commit()
};

}  // namespace semba::model
