#pragma once

#include "settings.hpp"

#include <filesystem>
#include <string>

namespace semba::cli {

struct EvalFlags {
  std::string checkpoint;
  std::string split = "test";
  std::string breakdown = "all";
  std::string pairs;
  bool dump_predictions = false;
};

// Each command writes everything under settings.out and returns an exit code.
int cmd_stats(const RunSettings& s);
int cmd_train(const RunSettings& s, bool dump_predictions);
int cmd_eval(const RunSettings& s, const EvalFlags& f);
int cmd_predict(const RunSettings& s, const EvalFlags& f);
int cmd_plot_weights(const RunSettings& s, const EvalFlags& f);
int cmd_ablation(const RunSettings& s);

}  // namespace semba::cli
