#pragma once

// Explicit-loop encoder references shared by the unit and acceptance suites.

#include "semba/model/model.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace semba::testing {

using events::SignedEvent;

// y = W1 relu(W0 x + b0) + b1 with explicit loops.
inline Vector mlp_oracle(const ParameterSet& p, const std::string& prefix, const Vector& x) {
  const Matrix& w0 = p[p.index(prefix + ".w0")].value;
  const Matrix& b0 = p[p.index(prefix + ".b0")].value;
  const Matrix& w1 = p[p.index(prefix + ".w1")].value;
  const Matrix& b1 = p[p.index(prefix + ".b1")].value;
  std::vector<double> hidden(static_cast<std::size_t>(w0.rows()));
  for (Eigen::Index r = 0; r < w0.rows(); ++r) {
    double acc = b0(r, 0);
    for (Eigen::Index c = 0; c < w0.cols(); ++c) acc += w0(r, c) * x(c);
    hidden[static_cast<std::size_t>(r)] = acc > 0 ? acc : 0;
  }
  Vector y(w1.rows());
  for (Eigen::Index r = 0; r < w1.rows(); ++r) {
    double acc = b1(r, 0);
    for (Eigen::Index c = 0; c < w1.cols(); ++c) acc += w1(r, c) * hidden[static_cast<std::size_t>(c)];
    y(r) = acc;
  }
  return y;
}

// Straight-line embedding: W1 h_u plus per-head softmax attention over rows
// [h_i; log1p(t - tau); |e|].
inline Vector embedding_oracle(const ParameterSet& p, const Vector& hu, const std::vector<Vector>& rows, int heads) {
  const Matrix& w1 = p[p.index("embed.w1")].value;
  const Matrix& wq = p[p.index("embed.attn.wq")].value;
  const Matrix& wk = p[p.index("embed.attn.wk")].value;
  const Matrix& wv = p[p.index("embed.attn.wv")].value;
  const Eigen::Index d = w1.rows();
  const Eigen::Index dh = d / heads;
  Vector z(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    double acc = 0;
    for (Eigen::Index c = 0; c < hu.size(); ++c) acc += w1(r, c) * hu(c);
    z(r) = acc;
  }
  if (rows.empty()) return z;
  auto project = [](const Matrix& w, const Vector& x) {
    Vector y = Vector::Zero(w.rows());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) y(r) += w(r, c) * x(c);
    return y;
  };
  const Vector q = project(wq, hu);
  std::vector<Vector> k, v;
  for (const auto& row : rows) {
    k.push_back(project(wk, row));
    v.push_back(project(wv, row));
  }
  for (int h = 0; h < heads; ++h) {
    std::vector<double> logits;
    double mx = -INFINITY;
    for (const auto& kj : k) {
      double s = 0;
      for (Eigen::Index i = h * dh; i < (h + 1) * dh; ++i) s += q(i) * kj(i);
      logits.push_back(s / std::sqrt(static_cast<double>(dh)));
      mx = std::max(mx, logits.back());
    }
    double total = 0;
    for (auto& l : logits) total += (l = std::exp(l - mx));
    for (std::size_t j = 0; j < v.size(); ++j)
      for (Eigen::Index i = h * dh; i < (h + 1) * dh; ++i) z(i) += logits[j] / total * v[j](i);
  }
  return z;
}

inline std::vector<SignedEvent> random_stream(std::mt19937_64& rng, int nodes, int count, double t0 = 0.0) {
  std::uniform_int_distribution<int> node(0, nodes - 1);
  std::uniform_real_distribution<double> weight(-10, 10);
  std::uniform_int_distribution<int> tie(0, 3);
  std::vector<SignedEvent> out;
  double t = t0;
  while (static_cast<int>(out.size()) < count) {
    const int a = node(rng), b = node(rng);
    if (a == b) continue;
    double w = std::round(weight(rng));
    if (w == 0) w = 1;
    if (tie(rng) != 0) t += std::uniform_real_distribution<double>(0.1, 50)(rng);
    out.push_back({t, a, b, w});
  }
  return out;
}

}  // namespace semba::testing
