#pragma once

#include "semba/events/event_log.hpp"
#include "semba/model/model.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace semba::harness {

using events::NodeId;
using model::TaskKind;

// One scored pair. `label` is the binary label (existence, sign) or the class
// (signed existence); `target` is the true weight for the regression task.
struct PredictionRecord {
  NodeId src = 0;
  NodeId dst = 0;
  double time = 0.0;
  std::size_t batch = 0;
  bool negative = false;  // sampled pair, not an observed event
  int label = 0;
  double target = 0.0;
  double score = 0.0;                   // probability of the positive label, or the predicted weight
  std::array<double, 3> probs{};        // class probabilities, signed existence only
};

// Metrics of one task over a set of records. `values` holds only the metrics
// of the configured task; a metric that is undefined on the set (e.g. AUROC
// with one class) is listed in `undefined` instead.
struct TaskMetrics {
  TaskKind task = TaskKind::existence;
  std::size_t count = 0;
  std::map<std::string, double> values;
  std::vector<std::string> undefined;

  bool empty() const { return count == 0; }
  bool has(const std::string& key) const { return values.count(key) != 0; }
};

TaskMetrics task_metrics(TaskKind task, const std::vector<PredictionRecord>& records);

// Early-stopping criterion per task: AUROC, weighted F1, or RMSE.
struct StoppingMetric {
  std::string key;
  bool higher_is_better = true;
};
StoppingMetric stopping_metric(TaskKind task);

// Negative-sampling seed for a given stream (training epoch, evaluation).
inline constexpr std::uint64_t kEvaluationStream = 0xE7A1;
std::uint64_t negative_seed(std::uint64_t seed, std::uint64_t stream);

// The labelled pairs a batch contributes for a task: every event, plus one
// corrupted-destination pair per event for tasks that use negatives.
struct BatchPairs {
  std::vector<NodeId> src;
  std::vector<NodeId> dst;
  std::vector<double> time;
  std::vector<bool> negative;
  std::vector<double> binary;  // existence, sign
  std::vector<int> classes;    // signed existence
  std::vector<double> target;  // signed weight
  std::size_t size() const { return src.size(); }
};

// Largest dense id seen through each event, plus one: the sampling universe
// of the batch ending at that event.
std::vector<NodeId> universe_prefix(const events::EventLog& log);

BatchPairs batch_pairs(TaskKind task, std::span<const events::SignedEvent> batch, NodeId universe, std::mt19937_64& rng);

// Embeds and scores the pairs on `tape`; returns the raw decoder output
// (logits or predicted weight), pairs x arity.
Var score_pairs(model::Model& m, Tape& tape, const BatchPairs& pairs, const model::LiveMemory* live = nullptr);
Var pair_loss(TaskKind task, const Var& output, const BatchPairs& pairs);
void append_records(TaskKind task, const Matrix& output, const BatchPairs& pairs, std::size_t batch,
                    std::vector<PredictionRecord>& out);

struct EvalOptions {
  std::size_t batch_size = 1000;
  std::uint64_t negative_seed = 0;
};

struct EvalResult {
  std::vector<PredictionRecord> records;
  TaskMetrics metrics;
  std::size_t batches = 0;
  std::size_t replayed_events = 0;
  // Predictions made when the encoder had seen an event at or past the batch
  // boundary. Always zero unless the protocol is broken.
  std::size_t causality_violations = 0;
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
};

// Online evaluation with frozen parameters: reset, replay every event before
// the split in batches, then per split batch predict with the pre-batch state
// and ingest the batch. Throws DataError on an empty split.
EvalResult evaluate_sequential(model::Model& m, const events::EventLog& log, const events::EventView& split,
                               const EvalOptions& options);

// Membership of a pair relative to the nodes seen in training.
enum class PairView { transductive, inductive, one_unseen };

std::vector<bool> seen_nodes(const events::EventView& events, NodeId node_count);
PairView classify_pair(NodeId u, NodeId v, const std::vector<bool>& seen);

struct ViewSplit {
  std::vector<std::size_t> transductive;  // both endpoints seen
  std::vector<std::size_t> inductive;     // neither endpoint seen
  std::vector<std::size_t> one_unseen;    // excluded from both main views
};

// Indices of records per view; the views partition the records.
ViewSplit split_trans_inductive(const std::vector<PredictionRecord>& records, const std::vector<bool>& seen);
std::vector<PredictionRecord> select(const std::vector<PredictionRecord>& records, const std::vector<std::size_t>& idx);

}  // namespace semba::harness
