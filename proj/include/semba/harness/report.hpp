#pragma once

#include "semba/harness/train.hpp"

#include <json.hpp>

#include <string>

namespace semba::harness {

struct EvalReport {
  std::string split;  // "validation" or "test"
  TaskMetrics metrics;
  TaskMetrics transductive;
  TaskMetrics inductive;
  TaskMetrics one_unseen;
  std::string ablation;
  std::string embedding_source;
  std::size_t memory_slots = 0;
  std::size_t causality_violations = 0;
  bool parameters_unchanged = true;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  TrainConfig config;
  std::string dataset;
};

// Sequential evaluation of `split` plus the breakdown by training-node
// membership. `records`, when given, receives the raw predictions.
EvalReport evaluate_report(model::Model& m, const events::EventLog& log, const events::DatasetSplit& split,
                           const TrainConfig& config, const std::string& which, std::vector<PredictionRecord>* records = nullptr);

// Histogram convention of the KL metric, echoed into reports.
inline constexpr const char* kKlConvention =
    "bins = nearest integer over the union range of true and predicted weights; both histograms smoothed by 1e-6 and "
    "renormalized; KL(actual || predicted)";

nlohmann::json to_json(const TaskMetrics& m);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const TrainResult& r);

struct AblationArm {
  std::string name;  // full, -BA, -emb, -mem
  TrainResult training;
  EvalReport test;
};

// Trains and tests the full model and the three single-component ablations
// with the base config's seed, split and hyperparameters.
std::vector<AblationArm> run_ablation(const events::EventLog& log, const TrainConfig& base, const std::string& dataset = {},
                                      const std::function<void(const std::string&, const EpochRecord&)>& on_epoch = {});

// One row per arm: variant, embedding source, memory slots, best epoch, then
// the task metrics (overall, transductive, inductive).
std::string ablation_csv(const std::vector<AblationArm>& arms);

}  // namespace semba::harness
