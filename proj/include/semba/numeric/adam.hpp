#pragma once

#include "semba/numeric/parameters.hpp"

#include <cmath>

namespace semba::numeric {

struct AdamConstants {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;
};

// One Adam update. The step counter is incremented before bias correction,
// so the first call uses t = 1.
template <typename Scalar>
void adam_step(ParameterSet<Scalar>& params, const GradientMap<Scalar>& grads, Scalar lr) {
  if (grads.size() != params.size()) throw ContractError("adam_step: gradient map does not cover every parameter");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (grads[i].rows() != p.value.rows() || grads[i].cols() != p.value.cols())
      throw DimensionError("adam_step: gradient shape mismatch for '" + p.name + "'");
    if (!grads[i].allFinite()) throw NumericError("adam_step: non-finite gradient for parameter '" + p.name + "'");
  }
  params.set_step(params.step() + 1);
  const auto t = static_cast<Scalar>(params.step());
  const Scalar b1 = static_cast<Scalar>(AdamConstants::beta1);
  const Scalar b2 = static_cast<Scalar>(AdamConstants::beta2);
  const Scalar eps = static_cast<Scalar>(AdamConstants::epsilon);
  const Scalar correction1 = Scalar(1) - std::pow(b1, t);
  const Scalar correction2 = Scalar(1) - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    p.first_moment = b1 * p.first_moment + (Scalar(1) - b1) * g;
    p.second_moment = b2 * p.second_moment + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.value.array() -= lr * (p.first_moment.array() / correction1) /
                       ((p.second_moment.array() / correction2).sqrt() + eps);
  }
}

}  // namespace semba::numeric
