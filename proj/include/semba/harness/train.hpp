#pragma once

#include "semba/harness/protocol.hpp"

#include <functional>
#include <stdexcept>

namespace semba::harness {

struct TrainConfig {
  TaskKind task = TaskKind::sign;
  model::EncoderConfig encoder;
  std::size_t batch_size = 1000;
  double learning_rate = 1e-3;
  int max_epochs = 20;
  int patience = 5;
  std::uint64_t seed = 42;
  events::SplitFractions split;

  // Throws model::ConfigError on non-positive sizes or a bad encoder config.
  void validate() const;
};

// Raised when a batch loss is NaN or exceeds the divergence bound.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(int epoch, std::size_t batch, std::string reason, double loss);
  int epoch;
  std::size_t batch;
  std::string reason;  // "nan" or "divergence"
  double loss;
};

inline constexpr double kDivergenceLoss = 1e6;

struct EpochPass {
  std::vector<double> losses;  // one per batch
  std::vector<PredictionRecord> records;
  std::size_t causality_violations = 0;
  double mean_loss() const;
};

// One pass over the training events in time order. Each step ingests the
// previous batch on the tape, scores this batch from the resulting state,
// backpropagates and takes an Adam step, then commits the ingested memories.
// Gradients therefore reach the memory and message parameters through one
// batch of memory updates; state from earlier batches is constant.
EpochPass train_epoch(model::Model& m, const events::EventLog& log, const events::EventView& train, const TrainConfig& config,
                      int epoch);

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  TaskMetrics train;
  TaskMetrics validation;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  std::vector<double> loss_trace;  // every batch of every epoch
  int best_epoch = -1;
  double best_value = 0.0;
  bool stopped_early = false;
  double seconds = 0.0;
};

// Trains with early stopping on the validation split and leaves the
// parameters of the best validation epoch in `m`.
TrainResult train(model::Model& m, const events::EventLog& log, const events::DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace semba::harness
