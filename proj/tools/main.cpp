#include "commands.hpp"

#include "semba/events/event_log.hpp"
#include "semba/harness/train.hpp"
#include "semba/metrics/metrics.hpp"
#include "semba/numeric/tensor.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using namespace semba;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// manifest.json is written with status "running" before any work and
// rewritten with the outcome, so an interrupted run is still identifiable.
class Manifest {
 public:
  Manifest(std::string command, const cli::RunSettings& s, std::vector<fs::path> configs) : path_(s.out / "manifest.json") {
    j_ = {{"command", std::move(command)}, {"output_directory", s.out.string()}, {"config", cli::settings_map(s)},
          {"started", utc_now()}, {"status", "running"}};
    j_["config_files"] = nlohmann::json::array();
    for (const auto& c : configs) j_["config_files"].push_back(c.string());
    write();
  }
  void finish(int code, const std::string& message) {
    j_["finished"] = utc_now();
    j_["status"] = code == kExitOk ? "ok" : "failed";
    j_["exit_code"] = code;
    if (!message.empty()) j_["error"] = message;
    write();
  }

 private:
  void write() const {
    std::ofstream out(path_);
    out << j_.dump(2) << '\n';
  }
  fs::path path_;
  nlohmann::json j_;
};

struct Subcommand {
  CLI::App* app = nullptr;
  std::unique_ptr<cli::SettingFlags> flags;
  std::string out;
};

Subcommand add(CLI::App& root, const std::string& name, const std::string& help, bool with_training = true) {
  Subcommand c;
  c.app = root.add_subcommand(name, help);
  c.flags = std::make_unique<cli::SettingFlags>(*c.app, with_training);
  c.app->add_option("--out", c.out, "output directory (default $SEMBA_OUT/" + name + ", else runs/" + name + ")");
  return c;
}

int run(const std::string& name, const Subcommand& c, std::vector<fs::path> configs, const std::function<int(const cli::RunSettings&)>& body) {
  if (!c.flags->config_path().empty()) configs.emplace_back(c.flags->config_path());
  cli::RunSettings s = c.flags->resolve(configs, name);
  s.out = c.out.empty() ? cli::default_output_root() / name : fs::path(c.out);
  std::error_code ec;
  fs::create_directories(s.out, ec);
  if (ec) throw events::DataError("cannot create output directory '" + s.out.string() + "': " + ec.message());
  {
    std::ofstream snapshot(s.out / "config.ini");
    snapshot << cli::to_ini(s);
    if (!snapshot) throw events::DataError("cannot write config snapshot");
  }
  Manifest manifest(name, s, configs);
  try {
    const int code = body(s);
    manifest.finish(code, "");
    return code;
  } catch (const harness::TrainingAborted& e) {
    manifest.finish(kExitNumeric, e.what());
    throw;
  } catch (const std::exception& e) {
    const int code = dynamic_cast<const model::ConfigError*>(&e) ? kExitUsage
                     : dynamic_cast<const numeric::NumericError*>(&e) ? kExitNumeric
                                                                      : kExitData;
    manifest.finish(code, e.what());
    throw;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEMBA: signed temporal link prediction with balance-aware memory"};
  app.require_subcommand(1);
  cli::EvalFlags ef;
  bool dump_train = false;

  auto stats = add(app, "stats", "dataset statistics as JSON", false);
  auto train = add(app, "train", "train a model and write a checkpoint");
  train.app->add_flag("--dump-predictions", dump_train, "write validation_predictions.csv");
  auto eval = add(app, "eval", "evaluate a checkpoint on the validation or test split");
  auto predict = add(app, "predict", "score query pairs against a checkpoint");
  auto plot = add(app, "plot-weights", "predicted vs true rounded weight histogram (signed-weight task)");
  auto ablation = add(app, "ablation", "train and test the full, -BA, -emb and -mem variants");
  for (auto* sub : {eval.app, predict.app, plot.app})
    sub->add_option("--checkpoint", ef.checkpoint, "checkpoint.params from a train run")->required()->check(CLI::ExistingFile);
  for (auto* sub : {eval.app, plot.app})
    sub->add_option("--split", ef.split, "val or test")->check(CLI::IsMember({"val", "test"}));
  eval.app->add_option("--breakdown", ef.breakdown, "trans, ind or all")->check(CLI::IsMember({"trans", "ind", "all"}));
  eval.app->add_flag("--dump-predictions", ef.dump_predictions, "write predictions.csv with raw node ids");
  predict.app->add_option("--pairs", ef.pairs, "CSV of src,dst,time queries")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // A checkpoint's own config.ini comes first so its model shape is reused.
  std::vector<fs::path> checkpoint_configs;
  if (!ef.checkpoint.empty()) {
    const auto sibling = fs::path(ef.checkpoint).parent_path() / "config.ini";
    if (fs::exists(sibling)) checkpoint_configs.push_back(sibling);
  }

  try {
    if (stats.app->parsed()) return run("stats", stats, {}, cli::cmd_stats);
    if (train.app->parsed()) return run("train", train, {}, [&](const cli::RunSettings& s) { return cli::cmd_train(s, dump_train); });
    if (eval.app->parsed()) return run("eval", eval, checkpoint_configs, [&](const cli::RunSettings& s) { return cli::cmd_eval(s, ef); });
    if (predict.app->parsed())
      return run("predict", predict, checkpoint_configs, [&](const cli::RunSettings& s) { return cli::cmd_predict(s, ef); });
    if (plot.app->parsed())
      return run("plot-weights", plot, checkpoint_configs, [&](const cli::RunSettings& s) { return cli::cmd_plot_weights(s, ef); });
    if (ablation.app->parsed()) return run("ablation", ablation, {}, cli::cmd_ablation);
  } catch (const harness::TrainingAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const model::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const numeric::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
