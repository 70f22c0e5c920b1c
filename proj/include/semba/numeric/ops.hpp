#pragma once

#include "semba/numeric/tape.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

// Differentiable free functions over Var. Each op computes its value with
// Eigen and records a closure that maps the output gradient to its parents.
namespace semba::numeric {

namespace detail {

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.rows(), a.cols()) + " vs " +
                         shape_string(b.rows(), b.cols()));
}

template <typename Scalar>
Tape<Scalar>& same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return *a.tape();
}

// Elementwise unary op; dfdx receives (input, output) and returns the local derivative.
template <typename Scalar, typename F, typename D>
Var<Scalar> unary(const Var<Scalar>& a, F f, D dfdx) {
  using Matrix = MatrixX<Scalar>;
  auto& tape = *a.tape();
  Matrix out = a.value().unaryExpr(f);
  auto ai = a;
  return tape.record(std::move(out), {a}, [ai, dfdx](Tape<Scalar>& t, const Matrix& g) {
    // Output value is not stored in the closure; recompute from the input.
    const Matrix& x = t.value(ai);
    t.accumulate(ai, g.cwiseProduct(dfdx(x)));
  });
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "add");
  auto& tape = detail::same_tape(a, b);
  return tape.record(a.value() + b.value(), {a, b}, [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "sub");
  auto& tape = detail::same_tape(a, b);
  return tape.record(a.value() - b.value(), {a, b}, [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

template <typename Scalar>
Var<Scalar> cwise_product(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape(a, b, "cwise_product");
  auto& tape = detail::same_tape(a, b);
  return tape.record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    t.accumulate(a, g.cwiseProduct(t.value(b)));
    t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar c) {
  return a.tape()->record(a.value() * c, {a}, [a, c](Tape<Scalar>& t, const MatrixX<Scalar>& g) { t.accumulate(a, g * c); });
}

/// a * b
template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + shape_string(a.rows(), a.cols()) + " * " + shape_string(b.rows(), b.cols()));
  auto& tape = detail::same_tape(a, b);
  return tape.record(a.value() * b.value(), {a, b}, [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

/// a * b^T, the row-batched form of a linear layer.
template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: " + shape_string(a.rows(), a.cols()) + " * T" + shape_string(b.rows(), b.cols()));
  auto& tape = detail::same_tape(a, b);
  return tape.record(a.value() * b.value().transpose(), {a, b}, [a, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b));
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * t.value(a));
  });
}

/// Adds column vector b to every row of x.
template <typename Scalar>
Var<Scalar> add_row_broadcast(const Var<Scalar>& x, const Var<Scalar>& b) {
  if (b.cols() != 1 || b.rows() != x.cols())
    throw DimensionError("add_row_broadcast: bias " + shape_string(b.rows(), b.cols()) + " for rows of width " +
                         std::to_string(x.cols()));
  auto& tape = detail::same_tape(x, b);
  MatrixX<Scalar> out = x.value().rowwise() + b.value().col(0).transpose();
  return tape.record(std::move(out), {x, b}, [x, b](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    t.accumulate(x, g);
    t.accumulate(b, g.colwise().sum().transpose());
  });
}

/// Stacks parts vertically; all parts need the same column count.
template <typename Scalar>
Var<Scalar> concat(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat of nothing");
  auto& tape = *parts[0].tape();
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat: column count mismatch");
    if (p.tape() != &tape) throw ContractError("operands live on different tapes");
    rows += p.rows();
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Var<Scalar>> kept(parts.begin(), parts.end());
  return tape.record(std::move(out), kept, [kept](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    Eigen::Index off = 0;
    for (const auto& p : kept) {
      const auto r = t.value(p).rows();
      t.accumulate(p, g.middleRows(off, r));
      off += r;
    }
  });
}

template <typename Scalar>
Var<Scalar> concat(std::initializer_list<Var<Scalar>> parts) {
  return concat(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw DimensionError("slice_rows out of range");
  MatrixX<Scalar> out = a.value().middleRows(start, count);
  return a.tape()->record(std::move(out), {a}, [a, start, count](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    MatrixX<Scalar> full = MatrixX<Scalar>::Zero(t.value(a).rows(), t.value(a).cols());
    full.middleRows(start, count) = g;
    t.accumulate(a, full);
  });
}

/// Turns k column vectors of equal length into a k x n matrix, one per row.
template <typename Scalar>
Var<Scalar> stack_rows(std::span<const Var<Scalar>> rows) {
  if (rows.empty()) throw ContractError("stack_rows of nothing");
  auto& tape = *rows[0].tape();
  const Eigen::Index width = rows[0].rows();
  MatrixX<Scalar> out(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].cols() != 1 || rows[i].rows() != width) throw DimensionError("stack_rows: rows must be equal-length vectors");
    if (rows[i].tape() != &tape) throw ContractError("operands live on different tapes");
    out.row(static_cast<Eigen::Index>(i)) = rows[i].value().col(0).transpose();
  }
  std::vector<Var<Scalar>> kept(rows.begin(), rows.end());
  return tape.record(std::move(out), kept, [kept](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    for (std::size_t i = 0; i < kept.size(); ++i) t.accumulate(kept[i], g.row(static_cast<Eigen::Index>(i)).transpose());
  });
}

/// Horizontal counterpart of concat: parts share a row count.
template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw ContractError("concat_cols of nothing");
  auto& tape = *parts[0].tape();
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols: row count mismatch");
    if (p.tape() != &tape) throw ContractError("operands live on different tapes");
    cols += p.cols();
  }
  MatrixX<Scalar> out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  std::vector<Var<Scalar>> kept(parts.begin(), parts.end());
  return tape.record(std::move(out), kept, [kept](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    Eigen::Index off = 0;
    for (const auto& p : kept) {
      const auto c = t.value(p).cols();
      t.accumulate(p, g.middleCols(off, c));
      off += c;
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::initializer_list<Var<Scalar>> parts) {
  return concat_cols(std::span<const Var<Scalar>>(parts.begin(), parts.size()));
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw DimensionError("slice_cols out of range");
  MatrixX<Scalar> out = a.value().middleCols(start, count);
  return a.tape()->record(std::move(out), {a}, [a, start, count](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    MatrixX<Scalar> full = MatrixX<Scalar>::Zero(t.value(a).rows(), t.value(a).cols());
    full.middleCols(start, count) = g;
    t.accumulate(a, full);
  });
}

/// out.row(i) = a.row(index[i]); indices may repeat.
template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::vector<Eigen::Index> index) {
  MatrixX<Scalar> out(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= a.rows()) throw DimensionError("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(index[i]);
  }
  return a.tape()->record(std::move(out), {a}, [a, index = std::move(index)](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    MatrixX<Scalar> full = MatrixX<Scalar>::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t i = 0; i < index.size(); ++i) full.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(a, full);
  });
}

/// Copy of base with base.row(index[i]) replaced by rows.row(i). Indices
/// must be distinct.
template <typename Scalar>
Var<Scalar> overwrite_rows(const Var<Scalar>& base, std::vector<Eigen::Index> index, const Var<Scalar>& rows) {
  if (rows.cols() != base.cols() || rows.rows() != static_cast<Eigen::Index>(index.size()))
    throw DimensionError("overwrite_rows: shape mismatch");
  auto& tape = detail::same_tape(base, rows);
  MatrixX<Scalar> out = base.value();
  std::vector<char> seen(static_cast<std::size_t>(base.rows()), 0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= base.rows()) throw DimensionError("overwrite_rows: index out of range");
    if (seen[static_cast<std::size_t>(index[i])]++) throw ContractError("overwrite_rows: duplicate index");
    out.row(index[i]) = rows.value().row(static_cast<Eigen::Index>(i));
  }
  return tape.record(std::move(out), {base, rows}, [base, rows, index = std::move(index)](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    if (t.requires_grad(rows)) {
      MatrixX<Scalar> gr(static_cast<Eigen::Index>(index.size()), g.cols());
      for (std::size_t i = 0; i < index.size(); ++i) gr.row(static_cast<Eigen::Index>(i)) = g.row(index[i]);
      t.accumulate(rows, gr);
    }
    if (t.requires_grad(base)) {
      MatrixX<Scalar> gb = g;
      for (auto i : index) gb.row(i).setZero();
      t.accumulate(base, gb);
    }
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); },
      [](const MatrixX<Scalar>& x) {
        MatrixX<Scalar> s = x.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
        return MatrixX<Scalar>(s.cwiseProduct((Scalar(1) - s.array()).matrix()));
      });
}

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return std::tanh(x); },
      [](const MatrixX<Scalar>& x) { return MatrixX<Scalar>((Scalar(1) - x.array().tanh().square()).matrix()); });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return x > Scalar(0) ? x : Scalar(0); },
      [](const MatrixX<Scalar>& x) { return MatrixX<Scalar>((x.array() > Scalar(0)).template cast<Scalar>().matrix()); });
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return std::exp(x); }, [](const MatrixX<Scalar>& x) { return MatrixX<Scalar>(x.array().exp().matrix()); });
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return std::log(x); }, [](const MatrixX<Scalar>& x) { return MatrixX<Scalar>(x.array().inverse().matrix()); });
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& a) {
  return detail::unary(
      a, [](Scalar x) { return x * x; }, [](const MatrixX<Scalar>& x) { return MatrixX<Scalar>(Scalar(2) * x); });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  MatrixX<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape<Scalar>& t, const MatrixX<Scalar>& g) {
    t.accumulate(a, MatrixX<Scalar>::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  return scale(sum(a), Scalar(1) / static_cast<Scalar>(a.size()));
}

template <typename Scalar>
Var<Scalar> dot(const Var<Scalar>& a, const Var<Scalar>& b) {
  return sum(cwise_product(a, b));
}

/// Result of scaled dot-product attention over n keys with h heads.
template <typename Scalar>
struct AttentionResult {
  Var<Scalar> output;            // d x 1, heads concatenated
  MatrixX<Scalar> weights;       // h x n, each row sums to 1
};

// Multi-head scaled dot-product attention for one query:
//   out[head] = sum_j softmax_j(q[head] . K[j, head] / sqrt(d_head)) * V[j, head]
// q is d x 1, keys and values are n x d, d divisible by heads.
template <typename Scalar>
AttentionResult<Scalar> attention_core(const Var<Scalar>& q, const Var<Scalar>& keys, const Var<Scalar>& values, int heads) {
  using Matrix = MatrixX<Scalar>;
  const Eigen::Index d = q.rows();
  const Eigen::Index n = keys.rows();
  if (heads <= 0 || d % heads != 0) throw DimensionError("attention: width not divisible by head count");
  if (q.cols() != 1 || keys.cols() != d || values.cols() != d || values.rows() != n)
    throw DimensionError("attention: inconsistent query/key/value shapes");
  if (n == 0) throw ContractError("attention over an empty key set");
  auto& tape = detail::same_tape(q, keys);
  detail::same_tape(q, values);
  const Eigen::Index dh = d / heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  Matrix weights(heads, n);
  Matrix out(d, 1);
  for (int h = 0; h < heads; ++h) {
    auto qh = q.value().middleRows(h * dh, dh);
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> logits = keys.value().middleCols(h * dh, dh) * qh * inv_sqrt;
    const Scalar mx = logits.maxCoeff();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> e = (logits.array() - mx).exp();
    e /= e.sum();
    weights.row(h) = e.transpose();
    out.middleRows(h * dh, dh) = values.value().middleCols(h * dh, dh).transpose() * e;
  }

  Var<Scalar> result = tape.record(out, {q, keys, values}, [q, keys, values, weights, heads, dh, inv_sqrt](Tape<Scalar>& t, const Matrix& g) {
    const Matrix& qv = t.value(q);
    const Matrix& kv = t.value(keys);
    const Matrix& vv = t.value(values);
    Matrix gq = Matrix::Zero(qv.rows(), 1);
    Matrix gk = Matrix::Zero(kv.rows(), kv.cols());
    Matrix gv = Matrix::Zero(vv.rows(), vv.cols());
    for (int h = 0; h < heads; ++h) {
      auto go = g.middleRows(h * dh, dh);                         // dh x 1
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha = weights.row(h).transpose();
      // d out / d V[j] = alpha_j
      gv.middleCols(h * dh, dh) += alpha * go.transpose();
      // d out / d alpha_j = V[j] . go, then through the softmax.
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> galpha = vv.middleCols(h * dh, dh) * go;
      const Scalar centre = alpha.dot(galpha);
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1> glogit = alpha.cwiseProduct((galpha.array() - centre).matrix()) * inv_sqrt;
      gq.middleRows(h * dh, dh) += kv.middleCols(h * dh, dh).transpose() * glogit;
      gk.middleCols(h * dh, dh) += glogit * qv.middleRows(h * dh, dh).transpose();
    }
    t.accumulate(q, gq);
    t.accumulate(keys, gk);
    t.accumulate(values, gv);
  });
  return {result, std::move(weights)};
}

/// Attention for many queries at once, each over its own contiguous key
/// segment.
template <typename Scalar>
struct SegmentAttentionResult {
  Var<Scalar> output;        // m x d; zero row for an empty segment
  MatrixX<Scalar> weights;   // n x h: weight of key j under head h within its segment
};

// Query i attends over key rows [offsets[i], offsets[i+1]) with the same
// per-head scaled dot-product rule as attention_core. Q is m x d, K and V are
// n x d, offsets has m + 1 non-decreasing entries ending at n.
template <typename Scalar>
SegmentAttentionResult<Scalar> segment_attention(const Var<Scalar>& q, const Var<Scalar>& keys, const Var<Scalar>& values,
                                                 std::vector<Eigen::Index> offsets, int heads) {
  using Matrix = MatrixX<Scalar>;
  using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index m = q.rows();
  const Eigen::Index d = q.cols();
  const Eigen::Index n = keys.rows();
  if (heads <= 0 || d % heads != 0) throw DimensionError("segment_attention: width not divisible by head count");
  if (keys.cols() != d || values.cols() != d || values.rows() != n)
    throw DimensionError("segment_attention: inconsistent query/key/value shapes");
  if (static_cast<Eigen::Index>(offsets.size()) != m + 1 || offsets.front() != 0 || offsets.back() != n)
    throw DimensionError("segment_attention: offsets must span the key rows");
  for (std::size_t i = 1; i < offsets.size(); ++i)
    if (offsets[i] < offsets[i - 1]) throw DimensionError("segment_attention: offsets must be non-decreasing");
  auto& tape = detail::same_tape(q, keys);
  detail::same_tape(q, values);
  const Eigen::Index dh = d / heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));

  Matrix weights(n, heads);
  Matrix out = Matrix::Zero(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index begin = offsets[static_cast<std::size_t>(i)];
    const Eigen::Index len = offsets[static_cast<std::size_t>(i) + 1] - begin;
    if (len == 0) continue;
    for (int h = 0; h < heads; ++h) {
      Column logits = keys.value().block(begin, h * dh, len, dh) * q.value().block(i, h * dh, 1, dh).transpose() * inv_sqrt;
      Column e = (logits.array() - logits.maxCoeff()).exp();
      e /= e.sum();
      weights.block(begin, h, len, 1) = e;
      out.block(i, h * dh, 1, dh) = e.transpose() * values.value().block(begin, h * dh, len, dh);
    }
  }

  Var<Scalar> result = tape.record(out, {q, keys, values}, [q, keys, values, weights, offsets = std::move(offsets), heads, dh, inv_sqrt](Tape<Scalar>& t, const Matrix& g) {
    const Matrix& qv = t.value(q);
    const Matrix& kv = t.value(keys);
    const Matrix& vv = t.value(values);
    Matrix gq = Matrix::Zero(qv.rows(), qv.cols());
    Matrix gk = Matrix::Zero(kv.rows(), kv.cols());
    Matrix gv = Matrix::Zero(vv.rows(), vv.cols());
    for (Eigen::Index i = 0; i + 1 < static_cast<Eigen::Index>(offsets.size()); ++i) {
      const Eigen::Index begin = offsets[static_cast<std::size_t>(i)];
      const Eigen::Index len = offsets[static_cast<std::size_t>(i) + 1] - begin;
      if (len == 0) continue;
      for (int h = 0; h < heads; ++h) {
        Column go = g.block(i, h * dh, 1, dh).transpose();
        Column alpha = weights.block(begin, h, len, 1);
        gv.block(begin, h * dh, len, dh) += alpha * go.transpose();
        Column galpha = vv.block(begin, h * dh, len, dh) * go;
        const Scalar centre = alpha.dot(galpha);
        Column glogit = alpha.cwiseProduct((galpha.array() - centre).matrix()) * inv_sqrt;
        gq.block(i, h * dh, 1, dh) += (kv.block(begin, h * dh, len, dh).transpose() * glogit).transpose();
        gk.block(begin, h * dh, len, dh) += glogit * qv.block(i, h * dh, 1, dh);
      }
    }
    t.accumulate(q, gq);
    t.accumulate(keys, gk);
    t.accumulate(values, gv);
  });
  return {result, std::move(weights)};
}

// Mean binary cross-entropy on logits, in the stable form
//   max(x,0) - x*y + log(1 + exp(-|x|)).
template <typename Scalar>
Var<Scalar> bce_with_logits(const Var<Scalar>& logits, std::span<const Scalar> labels) {
  using Matrix = MatrixX<Scalar>;
  if (logits.cols() != 1 || logits.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DimensionError("bce_with_logits: logits/labels length mismatch");
  if (labels.empty()) throw ContractError("bce_with_logits: empty batch");
  const Eigen::Index n = logits.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)];
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar x = logits.value()(i, 0);
    total += std::max(x, Scalar(0)) - x * y(i) + std::log1p(std::exp(-std::abs(x)));
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<Scalar>(n);
  return logits.tape()->record(std::move(out), {logits}, [logits, y, n](Tape<Scalar>& t, const Matrix& g) {
    const Matrix& x = t.value(logits);
    Matrix gx(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar s = Scalar(1) / (Scalar(1) + std::exp(-x(i, 0)));
      gx(i, 0) = (s - y(i)) / static_cast<Scalar>(n) * g(0, 0);
    }
    t.accumulate(logits, gx);
  });
}

/// Mean softmax cross-entropy; logits are n x classes, labels in [0, classes).
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(const Var<Scalar>& logits, std::span<const int> labels) {
  using Matrix = MatrixX<Scalar>;
  const Eigen::Index n = logits.rows();
  const Eigen::Index k = logits.cols();
  if (n != static_cast<Eigen::Index>(labels.size())) throw DimensionError("softmax_cross_entropy: logits/labels length mismatch");
  if (n == 0) throw ContractError("softmax_cross_entropy: empty batch");
  for (int l : labels)
    if (l < 0 || l >= k) throw ContractError("softmax_cross_entropy: label " + std::to_string(l) + " out of range");
  Matrix probs(n, k);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = logits.value().row(i);
    const Scalar mx = row.maxCoeff();
    const Scalar lse = mx + std::log((row.array() - mx).exp().sum());
    probs.row(i) = (row.array() - lse).exp();
    total += lse - row(labels[static_cast<std::size_t>(i)]);
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<Scalar>(n);
  std::vector<int> kept(labels.begin(), labels.end());
  return logits.tape()->record(std::move(out), {logits}, [logits, probs, kept, n](Tape<Scalar>& t, const Matrix& g) {
    Matrix gx = probs;
    for (Eigen::Index i = 0; i < n; ++i) gx(i, kept[static_cast<std::size_t>(i)]) -= Scalar(1);
    gx *= g(0, 0) / static_cast<Scalar>(n);
    t.accumulate(logits, gx);
  });
}

/// sqrt(mean((pred - target)^2)); pred is n x 1.
template <typename Scalar>
Var<Scalar> rmse_loss(const Var<Scalar>& pred, std::span<const Scalar> targets) {
  using Matrix = MatrixX<Scalar>;
  const Eigen::Index n = pred.rows();
  if (pred.cols() != 1 || n != static_cast<Eigen::Index>(targets.size())) throw DimensionError("rmse_loss: length mismatch");
  if (n == 0) throw ContractError("rmse_loss: empty batch");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = targets[static_cast<std::size_t>(i)];
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diff = pred.value().col(0) - y;
  const Scalar value = std::sqrt(diff.squaredNorm() / static_cast<Scalar>(n));
  Matrix out(1, 1);
  out(0, 0) = value;
  return pred.tape()->record(std::move(out), {pred}, [pred, y, n, value](Tape<Scalar>& t, const Matrix& g) {
    if (value == Scalar(0)) return;  // subgradient 0 at the minimum
    Matrix gx = (t.value(pred).col(0) - y) / (static_cast<Scalar>(n) * value) * g(0, 0);
    t.accumulate(pred, gx);
  });
}

}  // namespace semba::numeric
