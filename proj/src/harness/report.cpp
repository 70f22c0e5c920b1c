#include "semba/harness/report.hpp"

#include <chrono>
#include <sstream>

namespace semba::harness {

EvalReport evaluate_report(model::Model& m, const events::EventLog& log, const events::DatasetSplit& split,
                           const TrainConfig& config, const std::string& which, std::vector<PredictionRecord>* records) {
  const auto start = std::chrono::steady_clock::now();
  const events::EventView& view = which == "validation" ? split.validation : split.test;
  if (which != "validation" && which != "test") throw model::ConfigError("unknown split '" + which + "'");
  auto result = evaluate_sequential(m, log, view, EvalOptions{config.batch_size, negative_seed(config.seed, kEvaluationStream)});
  const auto views = split_trans_inductive(result.records, seen_nodes(split.train, log.node_count()));
  EvalReport r;
  r.split = which;
  r.metrics = result.metrics;
  r.transductive = task_metrics(config.task, select(result.records, views.transductive));
  r.inductive = task_metrics(config.task, select(result.records, views.inductive));
  r.one_unseen = task_metrics(config.task, select(result.records, views.one_unseen));
  r.ablation = config.encoder.ablation.name();
  r.embedding_source = config.encoder.embedding_source();
  r.memory_slots = static_cast<std::size_t>(m.encoder.memory().slots());
  r.causality_violations = result.causality_violations;
  r.parameters_unchanged = result.checksum_before == result.checksum_after;
  r.seed = config.seed;
  r.config = config;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (records) *records = std::move(result.records);
  return r;
}

nlohmann::json to_json(const TaskMetrics& m) {
  nlohmann::json j;
  j["count"] = m.count;
  j["empty"] = m.empty();
  j["metrics"] = m.values;
  j["undefined"] = m.undefined;
  return j;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"task", model::task_name(c.task)},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"epochs", c.max_epochs},
      {"patience", c.patience},
      {"seed", c.seed},
      {"split", {c.split.train, c.split.validation, c.split.test}},
      {"ablation", c.encoder.ablation.name()},
      {"memory_dim", c.encoder.memory_dim},
      {"embedding_dim", c.encoder.embedding_dim},
      {"heads", c.encoder.heads},
      {"feature_dim", c.encoder.feature_dim},
      {"message_dim", c.encoder.effective_message_dim()},
      {"split_message_nets", c.encoder.split_message_nets},
      {"shared_memory_cell", c.encoder.shared_memory_cell},
      {"signed_edge_input", c.encoder.signed_edge_input},
      {"history_cap", c.encoder.history_cap},
  };
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["split"] = r.split;
  j["task"] = model::task_name(r.config.task);
  j["metrics"] = to_json(r.metrics);
  j["transductive"] = to_json(r.transductive);
  j["inductive"] = to_json(r.inductive);
  j["one_unseen"] = to_json(r.one_unseen);
  j["ablation"] = r.ablation;
  j["embedding_source"] = r.embedding_source;
  j["memory_slots"] = r.memory_slots;
  j["causality_violations"] = r.causality_violations;
  j["parameters_unchanged"] = r.parameters_unchanged;
  j["runtime_seconds"] = r.seconds;
  j["seed"] = r.seed;
  j["config"] = to_json(r.config);
  j["dataset"] = r.dataset;
  if (r.config.task == TaskKind::signed_weight) j["kl_convention"] = kKlConvention;
  return j;
}

nlohmann::json to_json(const TrainResult& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"mean_loss", e.mean_loss},
                      {"train", to_json(e.train)},
                      {"validation", to_json(e.validation)},
                      {"seconds", e.seconds}});
  return {{"epochs", epochs},
          {"best_epoch", r.best_epoch},
          {"best_value", r.best_value},
          {"stopped_early", r.stopped_early},
          {"runtime_seconds", r.seconds},
          {"loss_trace", r.loss_trace}};
}

std::vector<AblationArm> run_ablation(const events::EventLog& log, const TrainConfig& base, const std::string& dataset,
                                      const std::function<void(const std::string&, const EpochRecord&)>& on_epoch) {
  const auto split = events::chronological_split(log, base.split);
  const std::pair<const char*, const char*> variants[] = {{"full", "none"}, {"-BA", "ba"}, {"-emb", "emb"}, {"-mem", "mem"}};
  std::vector<AblationArm> arms;
  for (const auto& [label, flags] : variants) {
    TrainConfig config = base;
    config.encoder.ablation = model::AblationConfig::from_name(flags);
    model::Model m(config.encoder, config.task, config.seed);
    AblationArm arm;
    arm.name = label;
    const std::string name = label;
    arm.training = train(m, log, split, config, [&](const EpochRecord& e) {
      if (on_epoch) on_epoch(name, e);
    });
    arm.test = evaluate_report(m, log, split, config, "test");
    arm.test.dataset = dataset;
    arms.push_back(std::move(arm));
  }
  return arms;
}

std::string ablation_csv(const std::vector<AblationArm>& arms) {
  std::ostringstream out;
  out.precision(17);
  std::vector<std::string> keys;
  for (const auto& a : arms)
    for (const auto& [k, v] : a.test.metrics.values)
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  out << "variant,embedding_source,memory_slots,best_epoch";
  for (const char* view : {"", "transductive_", "inductive_"})
    for (const auto& k : keys) out << ',' << view << k;
  out << '\n';
  for (const auto& a : arms) {
    out << a.name << ",\"" << a.test.embedding_source << "\"," << a.test.memory_slots << ',' << a.training.best_epoch;
    for (const TaskMetrics* m : {&a.test.metrics, &a.test.transductive, &a.test.inductive})
      for (const auto& k : keys) {
        out << ',';
        if (auto it = m->values.find(k); it != m->values.end()) out << it->second;
      }
    out << '\n';
  }
  return out.str();
}

}  // namespace semba::harness
