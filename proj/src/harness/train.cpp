#include "semba/harness/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

namespace semba::harness {

void TrainConfig::validate() const {
  encoder.validate();
  if (batch_size < 1) throw model::ConfigError("batch size must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw model::ConfigError("learning rate must be finite and non-negative");
  if (max_epochs < 1) throw model::ConfigError("epochs must be at least 1");
  if (patience < 1) throw model::ConfigError("patience must be at least 1");
}

TrainingAborted::TrainingAborted(int epoch_, std::size_t batch_, std::string reason_, double loss_)
    : std::runtime_error("training aborted (" + reason_ + ") at epoch " + std::to_string(epoch_) + ", batch " +
                         std::to_string(batch_) + ", loss " + std::to_string(loss_)),
      epoch(epoch_),
      batch(batch_),
      reason(std::move(reason_)),
      loss(loss_) {}

double EpochPass::mean_loss() const {
  return losses.empty() ? 0.0 : std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

EpochPass train_epoch(model::Model& m, const events::EventLog& log, const events::EventView& train, const TrainConfig& config,
                      int epoch) {
  EpochPass pass;
  m.encoder.reset();
  m.encoder.ensure(log.node_count());
  const auto universe = universe_prefix(log);
  std::mt19937_64 rng(negative_seed(config.seed, static_cast<std::uint64_t>(epoch)));
  std::optional<events::TemporalBatch> pending;
  for (const auto& b : events::batches(train, config.batch_size)) {
    Tape tape;
    model::LiveMemory live;
    if (pending) live = m.encoder.ingest(tape, m.params, pending->events);
    if (m.encoder.ingested() != b.begin || m.encoder.clock() > b.start_time) ++pass.causality_violations;
    const auto pairs = batch_pairs(m.task, b.events, universe[b.end - 1], rng);
    const Var output = score_pairs(m, tape, pairs, pending ? &live : nullptr);
    const Var loss = pair_loss(m.task, output, pairs);
    const double value = loss.item();
    if (std::isnan(value)) throw TrainingAborted(epoch, b.index, "nan", value);
    if (value > kDivergenceLoss) throw TrainingAborted(epoch, b.index, "divergence", value);
    append_records(m.task, output.value(), pairs, b.index, pass.records);
    tape.backward(loss);
    numeric::adam_step(m.params, tape.gradients(m.params), config.learning_rate);
    if (pending) m.encoder.commit(live);
    pass.losses.push_back(value);
    pending = b;
  }
  if (pending) m.encoder.process_batch(m.params, pending->events);
  return pass;
}

TrainResult train(model::Model& m, const events::EventLog& log, const events::DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto criterion = stopping_metric(config.task);
  TrainResult result;
  ParameterSet best = m.params;
  int since_best = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    auto pass = train_epoch(m, log, split.train, config, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = pass.mean_loss();
    rec.train = task_metrics(config.task, pass.records);
    result.loss_trace.insert(result.loss_trace.end(), pass.losses.begin(), pass.losses.end());
    const auto val = evaluate_sequential(m, log, split.validation,
                                         EvalOptions{config.batch_size, negative_seed(config.seed, kEvaluationStream)});
    rec.validation = val.metrics;
    rec.seconds = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    const auto it = rec.validation.values.find(criterion.key);
    const bool improved = it != rec.validation.values.end() &&
                          (result.best_epoch < 0 ||
                           (criterion.higher_is_better ? it->second > result.best_value : it->second < result.best_value));
    if (improved) {
      result.best_epoch = epoch;
      result.best_value = it->second;
      best = m.params;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (result.best_epoch >= 0) m.params = best;
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace semba::harness
