#include "semba/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace semba::metrics {
namespace {

template <typename A, typename B>
void require_pairs(std::span<const A> a, std::span<const B> b, const char* what) {
  if (a.size() != b.size()) throw MetricError(std::string(what) + ": length mismatch");
  if (a.empty()) throw MetricError(std::string(what) + ": empty input");
}

void require_binary(std::span<const int> labels, const char* what) {
  for (int y : labels)
    if (y != 0 && y != 1) throw MetricError(std::string(what) + ": labels must be 0 or 1");
}

double f1_from_counts(double tp, double fp, double fn) {
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

double f1_binary(std::span<const double> scores, std::span<const int> labels, double threshold) {
  require_pairs(scores, labels, "f1_binary");
  require_binary(labels, "f1_binary");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++tp;
    if (predicted && labels[i] == 0) ++fp;
    if (!predicted && labels[i] == 1) ++fn;
  }
  return f1_from_counts(tp, fp, fn);
}

AurocFraction auroc_fraction(std::span<const double> scores, std::span<const int> labels) {
  require_pairs(scores, labels, "auroc");
  require_binary(labels, "auroc");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t positives = 0, twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j+1 share the average (i + j + 2) / 2.
    const std::uint64_t twice_rank = i + j + 2;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) {
        ++positives;
        twice_rank_sum += twice_rank;
      }
    i = j + 1;
  }
  const std::uint64_t negatives = scores.size() - positives;
  if (positives == 0 || negatives == 0) throw MetricError("auroc: both classes must be present");
  return {twice_rank_sum - positives * (positives + 1), 2 * positives * negatives};
}

double auroc(std::span<const double> scores, std::span<const int> labels) { return auroc_fraction(scores, labels).value(); }

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  require_pairs(predicted, labels, "accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double f1_multiclass(std::span<const int> predicted, std::span<const int> labels, Averaging averaging) {
  require_pairs(predicted, labels, "f1_multiclass");
  if (averaging == Averaging::micro) {
    // Single-label case: micro precision = micro recall = accuracy.
    return accuracy(predicted, labels);
  }
  std::set<int> classes(labels.begin(), labels.end());
  classes.insert(predicted.begin(), predicted.end());
  std::map<int, double> tp, fp, fn, support;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    support[labels[i]] += 1;
    if (predicted[i] == labels[i]) {
      tp[labels[i]] += 1;
    } else {
      fp[predicted[i]] += 1;
      fn[labels[i]] += 1;
    }
  }
  double total = 0, weight = 0;
  for (int c : classes) {
    const double f1 = f1_from_counts(tp[c], fp[c], fn[c]);
    const double w = averaging == Averaging::weighted ? support[c] : 1.0;
    total += w * f1;
    weight += w;
  }
  return weight > 0 ? total / weight : 0.0;
}

std::vector<int> argmax_rows(std::span<const double> probabilities, std::size_t classes) {
  if (classes == 0 || probabilities.size() % classes != 0) throw MetricError("argmax_rows: table is not n x classes");
  std::vector<int> out(probabilities.size() / classes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto row = probabilities.subspan(i * classes, classes);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

double rmse(std::span<const double> predicted, std::span<const double> targets) {
  require_pairs(predicted, targets, "rmse");
  double sum = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) sum += (predicted[i] - targets[i]) * (predicted[i] - targets[i]);
  return std::sqrt(sum / static_cast<double>(targets.size()));
}

RSquared r_squared(std::span<const double> predicted, std::span<const double> targets) {
  require_pairs(predicted, targets, "r_squared");
  const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(targets.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ss_res += (targets[i] - predicted[i]) * (targets[i] - predicted[i]);
    ss_tot += (targets[i] - mean) * (targets[i] - mean);
  }
  if (ss_tot == 0.0) return {};
  return {1.0 - ss_res / ss_tot, true};
}

WeightHistogram weight_histograms(std::span<const double> predicted, std::span<const double> targets) {
  require_pairs(predicted, targets, "weight_histograms");
  auto bin = [](double v) {
    if (!std::isfinite(v)) throw MetricError("weight_histograms: non-finite value");
    return static_cast<int>(std::lround(v));
  };
  WeightHistogram h;
  h.lo = bin(targets[0]);
  h.hi = h.lo;
  for (auto series : {predicted, targets})
    for (double v : series) {
      h.lo = std::min(h.lo, bin(v));
      h.hi = std::max(h.hi, bin(v));
    }
  const auto bins = static_cast<std::size_t>(h.hi - h.lo + 1);
  h.actual.assign(bins, 0.0);
  h.predicted.assign(bins, 0.0);
  for (double v : targets) h.actual[static_cast<std::size_t>(bin(v) - h.lo)] += 1;
  for (double v : predicted) h.predicted[static_cast<std::size_t>(bin(v) - h.lo)] += 1;
  return h;
}

double kl_divergence(const WeightHistogram& h, double epsilon) {
  if (h.actual.size() != h.predicted.size() || h.actual.empty()) throw MetricError("kl_divergence: malformed histogram");
  auto smooth = [epsilon](const std::vector<double>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (total <= 0) throw MetricError("kl_divergence: empty histogram");
    std::vector<double> p(counts.size());
    double z = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) z += (p[i] = counts[i] / total + epsilon);
    for (auto& v : p) v /= z;
    return p;
  };
  const auto p = smooth(h.actual);
  const auto q = smooth(h.predicted);
  double kl = 0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(kl, 0.0);
}

RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> targets) {
  return {rmse(predicted, targets), r_squared(predicted, targets), kl_divergence(weight_histograms(predicted, targets))};
}

}  // namespace semba::metrics
