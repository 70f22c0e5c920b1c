#pragma once

#include "semba/events/event_log.hpp"
#include "semba/model/config.hpp"
#include "semba/numeric.hpp"

#include <random>
#include <span>
#include <string>
#include <vector>

namespace semba::model {

enum class TaskKind { existence, sign, signed_existence, signed_weight };

// Outputs per pair: existence 1 logit, sign 1 logit, signed_existence 3
// logits, signed_weight 1 real.
int task_arity(TaskKind task);
std::string task_name(TaskKind task);
// Accepts "signed-existence" and "signed_existence" alike.
TaskKind parse_task(const std::string& name);
bool task_uses_negatives(TaskKind task);

// Three-class labels of the signed existence task.
inline constexpr int kClassPositive = 0;
inline constexpr int kClassNegative = 1;
inline constexpr int kClassNone = 2;

// Feedforward over concat(z_u, z_v). Hidden width equals the embedding width.
class PairDecoder {
 public:
  PairDecoder() = default;
  PairDecoder(ParameterSet& params, const std::string& prefix, Eigen::Index embedding_dim, TaskKind task);

  TaskKind task() const { return task_; }
  const numeric::Feedforward<double>& net() const { return net_; }

  // z_u and z_v are m x embedding_dim; returns m x arity.
  Var score(Tape& tape, const ParameterSet& params, const Var& zu, const Var& zv) const;

 private:
  TaskKind task_ = TaskKind::existence;
  numeric::Feedforward<double> net_;
};

struct NegativeSample {
  std::vector<events::NodeId> destinations;  // one per event, empty when skipped
  bool skipped = false;                      // universe too small to corrupt
};

// Corrupts the destination of each event: v' uniform over [0, universe),
// redrawn while v' equals the real destination.
NegativeSample negative_sample(std::span<const events::SignedEvent> batch, events::NodeId universe, std::mt19937_64& rng);

// Mean losses over a batch.
Var loss_bce(const Var& logits, std::span<const double> labels);
Var loss_ce3(const Var& logits, std::span<const int> labels);
Var loss_rmse(const Var& predictions, std::span<const double> targets);

}  // namespace semba::model
