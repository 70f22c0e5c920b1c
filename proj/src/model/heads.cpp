#include "semba/model/heads.hpp"

#include <algorithm>

namespace semba::model {

int task_arity(TaskKind task) { return task == TaskKind::signed_existence ? 3 : 1; }

std::string task_name(TaskKind task) {
  switch (task) {
    case TaskKind::existence: return "existence";
    case TaskKind::sign: return "sign";
    case TaskKind::signed_existence: return "signed-existence";
    case TaskKind::signed_weight: return "signed-weight";
  }
  return "unknown";
}

TaskKind parse_task(const std::string& name) {
  std::string key = name;
  std::replace(key.begin(), key.end(), '_', '-');
  for (auto t : {TaskKind::existence, TaskKind::sign, TaskKind::signed_existence, TaskKind::signed_weight})
    if (task_name(t) == key) return t;
  throw ConfigError("unknown task '" + name + "' (expected existence, sign, signed-existence or signed-weight)");
}

bool task_uses_negatives(TaskKind task) { return task == TaskKind::existence || task == TaskKind::signed_existence; }

PairDecoder::PairDecoder(ParameterSet& params, const std::string& prefix, Eigen::Index embedding_dim, TaskKind task)
    : task_(task),
      net_(params, prefix, numeric::LayerSpec{numeric::LayerKind::feedforward, 2 * embedding_dim, task_arity(task), embedding_dim}) {}

Var PairDecoder::score(Tape& tape, const ParameterSet& params, const Var& zu, const Var& zv) const {
  if (zu.rows() != zv.rows() || zu.cols() != zv.cols() || 2 * zu.cols() != net_.spec().input_dim)
    throw numeric::DimensionError("score_pair: embedding shapes do not match the decoder");
  return net_.apply_rows(tape, params, numeric::concat_cols({zu, zv}));
}

NegativeSample negative_sample(std::span<const events::SignedEvent> batch, events::NodeId universe, std::mt19937_64& rng) {
  NegativeSample out;
  if (universe < 2) {
    out.skipped = !batch.empty();
    return out;
  }
  std::uniform_int_distribution<events::NodeId> pick(0, universe - 1);
  out.destinations.reserve(batch.size());
  for (const auto& e : batch) {
    events::NodeId v = pick(rng);
    while (v == e.dst) v = pick(rng);
    out.destinations.push_back(v);
  }
  return out;
}

Var loss_bce(const Var& logits, std::span<const double> labels) {
  for (double y : labels)
    if (y != 0.0 && y != 1.0) throw numeric::ContractError("loss_bce: labels must be 0 or 1");
  return numeric::bce_with_logits<double>(logits, labels);
}

Var loss_ce3(const Var& logits, std::span<const int> labels) {
  if (logits.cols() != 3) throw numeric::DimensionError("loss_ce3: expected 3 logits per row");
  return numeric::softmax_cross_entropy<double>(logits, labels);
}

Var loss_rmse(const Var& predictions, std::span<const double> targets) { return numeric::rmse_loss<double>(predictions, targets); }

}  // namespace semba::model
