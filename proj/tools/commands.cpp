#include "commands.hpp"

#include "semba/events/csv.hpp"
#include "semba/events/stats.hpp"
#include "semba/harness/report.hpp"
#include "semba/metrics/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

namespace semba::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw events::DataError("cannot write '" + path.string() + "'");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

events::EventLog load_dataset(const RunSettings& s, events::ParseReport* report = nullptr) {
  if (s.dataset.empty()) throw model::ConfigError("no dataset given (--dataset or [data] dataset)");
  events::CsvOptions options;
  options.signed_binary = s.signed_binary;
  return events::parse_snap_csv(s.dataset, options, report);
}

void load_checkpoint(model::Model& m, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw events::DataError("cannot open checkpoint '" + path + "'");
  try {
    numeric::load_values(m.params, numeric::read_parameters<double>(in));
  } catch (const numeric::DimensionError& e) {
    throw events::DataError(std::string(e.what()) + " (model settings differ from the checkpoint's)");
  } catch (const std::runtime_error& e) {
    throw events::DataError("checkpoint '" + path + "': " + e.what());
  }
}

std::string raw(const events::EventLog& log, events::NodeId id) {
  return id < log.node_count() ? log.raw_id(id) : "#" + std::to_string(id);
}

void dump_records(const fs::path& path, const events::EventLog& log, const std::vector<harness::PredictionRecord>& records) {
  std::ofstream out(path);
  out.precision(17);
  out << "src,dst,time,batch,negative,label,target,score,p_positive,p_negative,p_none\n";
  for (const auto& r : records)
    out << raw(log, r.src) << ',' << raw(log, r.dst) << ',' << r.time << ',' << r.batch << ',' << r.negative << ',' << r.label
        << ',' << r.target << ',' << r.score << ',' << r.probs[0] << ',' << r.probs[1] << ',' << r.probs[2] << '\n';
  if (!out) throw events::DataError("cannot write '" + path.string() + "'");
}

void print_metrics(const std::string& label, const harness::TaskMetrics& m) {
  std::cout << label << " (" << m.count << " pairs)";
  for (const auto& [k, v] : m.values) std::cout << ' ' << k << '=' << v;
  if (m.empty()) std::cout << " empty";
  std::cout << '\n';
}

}  // namespace

int cmd_stats(const RunSettings& s) {
  events::ParseReport report;
  const auto log = load_dataset(s, &report);
  const auto st = events::compute_stats(log);
  json j = {{"dataset", s.dataset},
            {"nodes", st.nodes},
            {"links", st.links},
            {"events", st.events},
            {"f_plus", st.f_plus},
            {"f_ub", st.no_triangles ? json(nullptr) : json(st.f_ub)},
            {"no_triangles", st.no_triangles},
            {"triangles", st.triangles},
            {"unbalanced_triangles", st.unbalanced_triangles},
            {"days", st.days},
            {"raw_time_span", st.raw_span},
            {"parse",
             {{"rows", report.rows},
              {"kept", report.kept},
              {"missing_fields", report.missing_fields},
              {"zero_weight", report.zero_weight},
              {"self_loops", report.self_loops},
              {"malformed", report.malformed}}}};
  write_json(s.out / "stats.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_train(const RunSettings& s, bool dump_predictions) {
  const auto log = load_dataset(s);
  const auto split = events::chronological_split(log, s.train.split);
  model::Model m(s.train.encoder, s.train.task, s.train.seed);
  const auto key = harness::stopping_metric(s.train.task).key;
  const auto result = harness::train(m, log, split, s.train, [&](const harness::EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << " validation " << key << ' '
              << (e.validation.has(key) ? std::to_string(e.validation.values.at(key)) : "undefined") << " (" << e.seconds << " s)\n";
  });
  {
    std::ofstream out(s.out / "checkpoint.params");
    numeric::write_parameters(out, m.params);
    if (!out) throw events::DataError("cannot write checkpoint");
  }
  json report = harness::to_json(result);
  report["config"] = harness::to_json(s.train);
  report["dataset"] = s.dataset;
  write_json(s.out / "train_report.json", report);
  std::vector<harness::PredictionRecord> records;
  auto val = harness::evaluate_report(m, log, split, s.train, "validation", dump_predictions ? &records : nullptr);
  val.dataset = s.dataset;
  write_json(s.out / "validation_report.json", harness::to_json(val));
  if (dump_predictions) dump_records(s.out / "validation_predictions.csv", log, records);
  std::cout << "best epoch " << result.best_epoch << (result.stopped_early ? " (early stop)" : "") << '\n';
  print_metrics("validation", val.metrics);
  return 0;
}

int cmd_eval(const RunSettings& s, const EvalFlags& f) {
  const auto log = load_dataset(s);
  const auto split = events::chronological_split(log, s.train.split);
  model::Model m(s.train.encoder, s.train.task, s.train.seed);
  load_checkpoint(m, f.checkpoint);
  std::vector<harness::PredictionRecord> records;
  auto report = harness::evaluate_report(m, log, split, s.train, f.split == "val" ? "validation" : "test", &records);
  report.dataset = s.dataset;
  json j = harness::to_json(report);
  j["checkpoint"] = f.checkpoint;
  write_json(s.out / "eval_report.json", j);
  print_metrics(report.split, report.metrics);
  if (f.breakdown == "trans" || f.breakdown == "all") print_metrics("transductive", report.transductive);
  if (f.breakdown == "ind" || f.breakdown == "all") print_metrics("inductive", report.inductive);
  if (f.dump_predictions) {
    if (f.breakdown == "trans" || f.breakdown == "ind") {
      const auto views = harness::split_trans_inductive(records, harness::seen_nodes(split.train, log.node_count()));
      records = harness::select(records, f.breakdown == "trans" ? views.transductive : views.inductive);
    }
    dump_records(s.out / "predictions.csv", log, records);
  }
  return 0;
}

int cmd_predict(const RunSettings& s, const EvalFlags& f) {
  const auto log = load_dataset(s);
  model::Model m(s.train.encoder, s.train.task, s.train.seed);
  load_checkpoint(m, f.checkpoint);

  struct Query {
    std::string src, dst;
    double time;
  };
  std::vector<Query> queries;
  {
    std::ifstream in(f.pairs);
    if (!in) throw events::DataError("cannot open pairs file '" + f.pairs + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#' || line.rfind("src", 0) == 0) continue;
      std::stringstream row(line);
      std::string a, b, t;
      if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, t, ','))
        throw events::DataError("pairs line " + std::to_string(line_no) + ": expected src,dst,time");
      try {
        queries.push_back({a, b, std::stod(t)});
      } catch (const std::exception&) {
        throw events::DataError("pairs line " + std::to_string(line_no) + ": bad time '" + t + "'");
      }
    }
  }
  std::stable_sort(queries.begin(), queries.end(), [](const Query& a, const Query& b) { return a.time < b.time; });

  // Unknown raw ids get fresh dense ids, i.e. zero state.
  std::map<std::string, events::NodeId> extra;
  auto id = [&](const std::string& r) {
    if (auto known = log.lookup(r)) return *known;
    return extra.emplace(r, log.node_count() + static_cast<events::NodeId>(extra.size())).first->second;
  };
  m.encoder.reset();
  m.encoder.ensure(log.node_count());
  const auto all = log.events();
  std::size_t done = 0;
  std::ofstream out(s.out / "predictions.csv");
  out.precision(17);
  out << "src,dst,time,score,p_positive,p_negative,p_none\n";
  for (const auto& q : queries) {
    // State holds every event strictly before the query time.
    const auto stop = static_cast<std::size_t>(
        std::lower_bound(all.begin(), all.end(), q.time, [](const events::SignedEvent& e, double t) { return e.time < t; }) -
        all.begin());
    for (std::size_t b = std::max(done, m.encoder.ingested()); b < stop; b += s.train.batch_size)
      m.encoder.process_batch(m.params, all.subspan(b, std::min(s.train.batch_size, stop - b)));
    done = std::max(done, stop);
    harness::BatchPairs pairs;
    pairs.src = {id(q.src)};
    pairs.dst = {id(q.dst)};
    pairs.time = {q.time};
    pairs.negative = {false};
    pairs.binary = {0.0};
    pairs.classes = {0};
    pairs.target = {0.0};
    Tape tape(false);
    std::vector<harness::PredictionRecord> rec;
    harness::append_records(s.train.task, harness::score_pairs(m, tape, pairs).value(), pairs, 0, rec);
    out << q.src << ',' << q.dst << ',' << q.time << ',' << rec[0].score;
    if (s.train.task == model::TaskKind::signed_existence)
      out << ',' << rec[0].probs[0] << ',' << rec[0].probs[1] << ',' << rec[0].probs[2];
    else
      out << ",,,";
    out << '\n';
  }
  if (!out) throw events::DataError("cannot write predictions");
  std::cout << queries.size() << " predictions written to " << (s.out / "predictions.csv").string() << '\n';
  return 0;
}

int cmd_plot_weights(const RunSettings& s, const EvalFlags& f) {
  if (s.train.task != model::TaskKind::signed_weight) throw model::ConfigError("plot-weights needs --task signed-weight");
  const auto log = load_dataset(s);
  const auto split = events::chronological_split(log, s.train.split);
  model::Model m(s.train.encoder, s.train.task, s.train.seed);
  load_checkpoint(m, f.checkpoint);
  std::vector<harness::PredictionRecord> records;
  auto report = harness::evaluate_report(m, log, split, s.train, f.split == "val" ? "validation" : "test", &records);
  std::vector<double> predicted, targets;
  for (const auto& r : records) {
    predicted.push_back(r.score);
    targets.push_back(r.target);
  }
  const auto h = metrics::weight_histograms(predicted, targets);
  std::ofstream out(s.out / "weight_histogram.csv");
  out << "weight,true_count,predicted_count\n";
  for (std::size_t i = 0; i < h.actual.size(); ++i)
    out << h.lo + static_cast<long>(i) << ',' << h.actual[i] << ',' << h.predicted[i] << '\n';
  if (!out) throw events::DataError("cannot write histogram");
  report.dataset = s.dataset;
  write_json(s.out / "eval_report.json", harness::to_json(report));
  std::cout << "kl " << metrics::kl_divergence(h) << " over " << records.size() << " links, weights " << h.lo << ".." << h.hi << '\n';
  return 0;
}

int cmd_ablation(const RunSettings& s) {
  const auto log = load_dataset(s);
  const auto arms = harness::run_ablation(log, s.train, s.dataset, [](const std::string& arm, const harness::EpochRecord& e) {
    std::cerr << arm << " epoch " << e.epoch << " loss " << e.mean_loss << " (" << e.seconds << " s)\n";
  });
  json j = json::array();
  for (const auto& a : arms) j.push_back({{"variant", a.name}, {"training", harness::to_json(a.training)}, {"test", harness::to_json(a.test)}});
  write_json(s.out / "ablation.json", j);
  const auto csv = harness::ablation_csv(arms);
  write_text(s.out / "ablation.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace semba::cli
