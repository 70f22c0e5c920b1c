#include "semba/harness/protocol.hpp"

#include "semba/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace semba::harness {

using model::TaskKind;

TaskMetrics task_metrics(TaskKind task, const std::vector<PredictionRecord>& records) {
  TaskMetrics out;
  out.task = task;
  out.count = records.size();
  if (records.empty()) return out;
  switch (task) {
    case TaskKind::existence:
    case TaskKind::sign: {
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& r : records) {
        scores.push_back(r.score);
        labels.push_back(r.label);
      }
      out.values["f1"] = metrics::f1_binary(scores, labels);
      const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
      if (both)
        out.values["auroc"] = metrics::auroc(scores, labels);
      else
        out.undefined.push_back("auroc");
      break;
    }
    case TaskKind::signed_existence: {
      std::vector<int> predicted, labels;
      for (const auto& r : records) {
        predicted.push_back(static_cast<int>(std::max_element(r.probs.begin(), r.probs.end()) - r.probs.begin()));
        labels.push_back(r.label);
      }
      out.values["f1_weighted"] = metrics::f1_multiclass(predicted, labels, metrics::Averaging::weighted);
      out.values["f1_macro"] = metrics::f1_multiclass(predicted, labels, metrics::Averaging::macro);
      out.values["accuracy"] = metrics::accuracy(predicted, labels);
      break;
    }
    case TaskKind::signed_weight: {
      std::vector<double> predicted, targets;
      for (const auto& r : records) {
        predicted.push_back(r.score);
        targets.push_back(r.target);
      }
      const auto reg = metrics::regression_metrics(predicted, targets);
      out.values["rmse"] = reg.rmse;
      out.values["kl"] = reg.kl;
      if (reg.r2.defined)
        out.values["r2"] = reg.r2.value;
      else
        out.undefined.push_back("r2");
      break;
    }
  }
  return out;
}

StoppingMetric stopping_metric(TaskKind task) {
  switch (task) {
    case TaskKind::signed_existence: return {"f1_weighted", true};
    case TaskKind::signed_weight: return {"rmse", false};
    default: return {"auroc", true};
  }
}

std::uint64_t negative_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::vector<NodeId> universe_prefix(const events::EventLog& log) {
  std::vector<NodeId> out;
  out.reserve(log.size());
  NodeId top = 0;
  for (const auto& e : log.events()) {
    top = std::max({top, e.src + 1, e.dst + 1});
    out.push_back(top);
  }
  return out;
}

BatchPairs batch_pairs(TaskKind task, std::span<const events::SignedEvent> batch, NodeId universe, std::mt19937_64& rng) {
  BatchPairs p;
  auto add = [&](NodeId u, NodeId v, double t, bool negative) {
    p.src.push_back(u);
    p.dst.push_back(v);
    p.time.push_back(t);
    p.negative.push_back(negative);
  };
  for (const auto& e : batch) {
    add(e.src, e.dst, e.time, false);
    switch (task) {
      case TaskKind::existence: p.binary.push_back(1.0); break;
      case TaskKind::sign: p.binary.push_back(e.weight > 0 ? 1.0 : 0.0); break;
      case TaskKind::signed_existence: p.classes.push_back(e.weight > 0 ? model::kClassPositive : model::kClassNegative); break;
      case TaskKind::signed_weight: p.target.push_back(e.weight); break;
    }
  }
  if (model::task_uses_negatives(task)) {
    const auto neg = model::negative_sample(batch, universe, rng);
    for (std::size_t i = 0; i < neg.destinations.size(); ++i) {
      add(batch[i].src, neg.destinations[i], batch[i].time, true);
      if (task == TaskKind::existence)
        p.binary.push_back(0.0);
      else
        p.classes.push_back(model::kClassNone);
    }
  }
  return p;
}

Var score_pairs(model::Model& m, Tape& tape, const BatchPairs& pairs, const model::LiveMemory* live) {
  const auto n = static_cast<Eigen::Index>(pairs.size());
  std::vector<NodeId> nodes(pairs.src);
  nodes.insert(nodes.end(), pairs.dst.begin(), pairs.dst.end());
  std::vector<double> times(pairs.time);
  times.insert(times.end(), pairs.time.begin(), pairs.time.end());
  const Var z = m.encoder.embed(tape, m.params, nodes, times, live);
  return m.decoder.score(tape, m.params, numeric::slice_rows(z, 0, n), numeric::slice_rows(z, n, n));
}

Var pair_loss(TaskKind task, const Var& output, const BatchPairs& pairs) {
  switch (task) {
    case TaskKind::existence:
    case TaskKind::sign: return model::loss_bce(output, pairs.binary);
    case TaskKind::signed_existence: return model::loss_ce3(output, pairs.classes);
    case TaskKind::signed_weight: return model::loss_rmse(output, pairs.target);
  }
  throw numeric::ContractError("pair_loss: unknown task");
}

void append_records(TaskKind task, const Matrix& output, const BatchPairs& pairs, std::size_t batch,
                    std::vector<PredictionRecord>& out) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    PredictionRecord r;
    r.src = pairs.src[i];
    r.dst = pairs.dst[i];
    r.time = pairs.time[i];
    r.batch = batch;
    r.negative = pairs.negative[i];
    switch (task) {
      case TaskKind::existence:
      case TaskKind::sign:
        r.label = static_cast<int>(pairs.binary[i]);
        r.score = 1.0 / (1.0 + std::exp(-output(row, 0)));
        break;
      case TaskKind::signed_existence: {
        r.label = pairs.classes[i];
        const double top = output.row(row).maxCoeff();
        double total = 0;
        for (int c = 0; c < 3; ++c) total += r.probs[c] = std::exp(output(row, c) - top);
        for (double& p : r.probs) p /= total;
        r.score = r.probs[model::kClassPositive];
        break;
      }
      case TaskKind::signed_weight:
        r.target = pairs.target[i];
        r.label = r.target > 0;
        r.score = output(row, 0);
        break;
    }
    out.push_back(r);
  }
}

EvalResult evaluate_sequential(model::Model& m, const events::EventLog& log, const events::EventView& split,
                               const EvalOptions& options) {
  if (split.empty()) throw events::DataError("evaluation split is empty");
  EvalResult result;
  result.checksum_before = m.params.checksum();
  m.encoder.reset();
  m.encoder.ensure(log.node_count());
  for (const auto& b : events::batches(log.slice(0, split.begin_index()), options.batch_size)) {
    m.encoder.process_batch(m.params, b.events);
    result.replayed_events += b.events.size();
  }
  const auto universe = universe_prefix(log);
  std::mt19937_64 rng(options.negative_seed);
  for (const auto& b : events::batches(split, options.batch_size)) {
    if (m.encoder.ingested() != b.begin || m.encoder.clock() > b.start_time) ++result.causality_violations;
    const auto pairs = batch_pairs(m.task, b.events, universe[b.end - 1], rng);
    Tape tape(false);
    append_records(m.task, score_pairs(m, tape, pairs).value(), pairs, b.index, result.records);
    m.encoder.process_batch(m.params, b.events);
    ++result.batches;
  }
  result.metrics = task_metrics(m.task, result.records);
  result.checksum_after = m.params.checksum();
  return result;
}

std::vector<bool> seen_nodes(const events::EventView& events, NodeId node_count) {
  std::vector<bool> seen(static_cast<std::size_t>(node_count), false);
  for (const auto& e : events.events()) {
    seen.at(static_cast<std::size_t>(e.src)) = true;
    seen.at(static_cast<std::size_t>(e.dst)) = true;
  }
  return seen;
}

PairView classify_pair(NodeId u, NodeId v, const std::vector<bool>& seen) {
  auto known = [&](NodeId x) { return static_cast<std::size_t>(x) < seen.size() && seen[static_cast<std::size_t>(x)]; };
  const int count = known(u) + known(v);
  return count == 2 ? PairView::transductive : count == 0 ? PairView::inductive : PairView::one_unseen;
}

ViewSplit split_trans_inductive(const std::vector<PredictionRecord>& records, const std::vector<bool>& seen) {
  ViewSplit views;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (classify_pair(records[i].src, records[i].dst, seen)) {
      case PairView::transductive: views.transductive.push_back(i); break;
      case PairView::inductive: views.inductive.push_back(i); break;
      case PairView::one_unseen: views.one_unseen.push_back(i); break;
    }
  }
  return views;
}

std::vector<PredictionRecord> select(const std::vector<PredictionRecord>& records, const std::vector<std::size_t>& idx) {
  std::vector<PredictionRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records.at(i));
  return out;
}

}  // namespace semba::harness
