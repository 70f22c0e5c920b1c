#pragma once

#include "semba/numeric/adam.hpp"
#include "semba/numeric/layers.hpp"
#include "semba/numeric/ops.hpp"
#include "semba/numeric/parameters.hpp"
#include "semba/numeric/tape.hpp"
#include "semba/numeric/tensor.hpp"

namespace semba {

// The model and harness run in double precision throughout.
using Scalar = double;
using Matrix = numeric::MatrixX<double>;
using Vector = numeric::VectorX<double>;
using Tape = numeric::Tape<double>;
using Var = numeric::Var<double>;
using Tensor = numeric::Tensor<double>;
using ParameterSet = numeric::ParameterSet<double>;
using GradientMap = numeric::GradientMap<double>;

}  // namespace semba
