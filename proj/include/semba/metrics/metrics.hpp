#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace semba::metrics {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// F1 of the positive class; a score >= threshold predicts 1. Zero when
// precision and recall are both undefined or zero.
double f1_binary(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

// Mann-Whitney U with average ranks for ties, kept as integers:
// AUROC = twice_u / twice_pairs exactly.
struct AurocFraction {
  std::uint64_t twice_u = 0;
  std::uint64_t twice_pairs = 0;
  double value() const { return static_cast<double>(twice_u) / static_cast<double>(twice_pairs); }
};
AurocFraction auroc_fraction(std::span<const double> scores, std::span<const int> labels);
// Throws MetricError unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

enum class Averaging { macro, weighted, micro };

// Over the classes present in labels or predictions. Weighted uses the true
// class counts as weights.
double f1_multiclass(std::span<const int> predicted, std::span<const int> labels, Averaging averaging);
double accuracy(std::span<const int> predicted, std::span<const int> labels);
// Row-wise argmax of an n x k probability table stored row-major.
std::vector<int> argmax_rows(std::span<const double> probabilities, std::size_t classes);

double rmse(std::span<const double> predicted, std::span<const double> targets);

struct RSquared {
  double value = 0.0;
  bool defined = false;  // false when the targets have zero variance
};
RSquared r_squared(std::span<const double> predicted, std::span<const double> targets);

// Counts of values rounded to the nearest integer over [lo, hi], the range
// spanned by both series.
struct WeightHistogram {
  int lo = 0;
  int hi = 0;
  std::vector<double> actual;
  std::vector<double> predicted;
};
WeightHistogram weight_histograms(std::span<const double> predicted, std::span<const double> targets);

inline constexpr double kKlSmoothing = 1e-6;

// KL(actual || predicted) between the normalized histograms after adding
// epsilon to every bin of both and renormalizing.
double kl_divergence(const WeightHistogram& h, double epsilon = kKlSmoothing);

struct RegressionMetrics {
  double rmse = 0.0;
  RSquared r2;
  double kl = 0.0;
};
RegressionMetrics regression_metrics(std::span<const double> predicted, std::span<const double> targets);

}  // namespace semba::metrics
