#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace semba::numeric {

/// Thrown when operand shapes do not line up.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a caller violates an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown for NaN/Inf values and divergence.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

// Dense tensor of rank 0, 1 or 2. Rank-1 tensors are column vectors and a
// rank-0 tensor is stored as 1x1. Construction rejects non-finite values.
template <typename Scalar>
class Tensor {
 public:
  using Matrix = MatrixX<Scalar>;

  Tensor() = default;

  static Tensor scalar(Scalar value, bool requires_grad = false) {
    Matrix m(1, 1);
    m(0, 0) = value;
    return Tensor({}, std::move(m), requires_grad);
  }

  static Tensor vector(const VectorX<Scalar>& values, bool requires_grad = false) {
    return Tensor({values.size()}, Matrix(values), requires_grad);
  }

  static Tensor matrix(const Matrix& values, bool requires_grad = false) {
    return Tensor({values.rows(), values.cols()}, values, requires_grad);
  }

  static Tensor zeros(std::vector<Eigen::Index> shape) {
    Eigen::Index rows = shape.empty() ? 1 : shape[0];
    Eigen::Index cols = shape.size() < 2 ? 1 : shape[1];
    return Tensor(std::move(shape), Matrix::Zero(rows, cols), false);
  }

  const std::vector<Eigen::Index>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  Eigen::Index size() const { return values_.size(); }
  const Matrix& values() const { return values_; }
  bool requires_grad() const { return requires_grad_; }
  std::span<const Scalar> flat() const { return {values_.data(), static_cast<std::size_t>(values_.size())}; }

 private:
  Tensor(std::vector<Eigen::Index> shape, Matrix values, bool requires_grad)
      : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
    if (shape_.size() > 2) throw DimensionError("tensor rank above 2 is not supported");
    Eigen::Index product = 1;
    for (auto d : shape_) {
      if (d < 0) throw DimensionError("negative tensor dimension");
      product *= d;
    }
    if (product != values_.size()) throw DimensionError("tensor shape does not match value count");
    if (!values_.allFinite()) throw NumericError("tensor leaf contains NaN or Inf");
  }

  std::vector<Eigen::Index> shape_{};
  Matrix values_{Matrix::Zero(1, 1)};
  bool requires_grad_ = false;
};

}  // namespace semba::numeric
