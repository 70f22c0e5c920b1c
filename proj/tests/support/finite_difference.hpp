#pragma once

// Central finite-difference gradient oracle. Independent of the tape: it only
// ever evaluates the forward loss.

#include "semba/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace semba::testing {

struct GradientCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string worst;
};

// loss(params) must rebuild the whole forward pass from params.
inline GradientCheckReport check_gradients(ParameterSet& params, const GradientMap& analytic,
                                           const std::function<double(const ParameterSet&)>& loss,
                                           double eps = 1e-5, double rel_tol = 1e-4, double abs_tol = 1e-7) {
  GradientCheckReport r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value;
    for (Eigen::Index k = 0; k < value.size(); ++k) {
      const double original = value.data()[k];
      value.data()[k] = original + eps;
      const double up = loss(params);
      value.data()[k] = original - eps;
      const double down = loss(params);
      value.data()[k] = original;
      const double numeric = (up - down) / (2 * eps);
      const double exact = analytic[i].data()[k];
      const double abs_err = std::abs(numeric - exact);
      const double scale = std::max(std::abs(numeric), std::abs(exact));
      const double rel_err = scale > 0 ? abs_err / scale : 0.0;
      ++r.checked;
      const bool ok = abs_err < abs_tol || rel_err < rel_tol;
      if (!ok) ++r.failures;
      r.max_absolute_error = std::max(r.max_absolute_error, abs_err);
      if (abs_err >= abs_tol) r.max_relative_error = std::max(r.max_relative_error, rel_err);
      if (!ok && r.worst.empty()) {
        r.worst = params[i].name + "[" + std::to_string(k) + "] analytic=" + std::to_string(exact) +
                  " numeric=" + std::to_string(numeric);
      }
    }
  }
  return r;
}

}  // namespace semba::testing
