#pragma once

#include "semba/numeric/ops.hpp"

#include <string>
#include <vector>

namespace semba::numeric {

enum class LayerKind { feedforward, recurrent_cell, attention };
enum class Activation { relu, identity };

struct LayerSpec {
  LayerKind kind = LayerKind::feedforward;
  Eigen::Index input_dim = 0;
  Eigen::Index output_dim = 0;
  Eigen::Index hidden_dim = 0;   // feedforward only
  int heads = 1;                 // attention only
  Activation hidden_activation = Activation::relu;
  Eigen::Index key_dim = 0;      // attention: width of key/value inputs (defaults to input_dim)

  void validate() const {
    if (input_dim <= 0 || output_dim <= 0) throw DimensionError("layer dims must be positive");
    if (kind == LayerKind::feedforward && hidden_dim <= 0) throw DimensionError("feedforward hidden dim must be positive");
    if (kind == LayerKind::attention) {
      if (heads <= 0 || output_dim % heads != 0) throw DimensionError("attention output dim must be divisible by heads");
      if (key_dim < 0) throw DimensionError("attention key dim must be non-negative");
    }
  }
};

namespace detail {

template <typename Scalar>
void require_vector(const Var<Scalar>& v, Eigen::Index dim, const char* what) {
  if (v.cols() != 1 || v.rows() != dim)
    throw DimensionError(std::string(what) + ": expected vector of " + std::to_string(dim) + ", got " +
                         shape_string(v.rows(), v.cols()));
}

}  // namespace detail

// Two-layer perceptron: out = W1 act(W0 x + b0) + b1.
template <typename Scalar>
class Feedforward {
 public:
  Feedforward() = default;
  Feedforward(ParameterSet<Scalar>& params, const std::string& prefix, LayerSpec spec) : spec_(spec) {
    spec_.kind = LayerKind::feedforward;
    spec_.validate();
    w0_ = params.add(prefix + ".w0", spec_.hidden_dim, spec_.input_dim, spec_.input_dim);
    b0_ = params.add(prefix + ".b0", spec_.hidden_dim, 1, spec_.input_dim);
    w1_ = params.add(prefix + ".w1", spec_.output_dim, spec_.hidden_dim, spec_.hidden_dim);
    b1_ = params.add(prefix + ".b1", spec_.output_dim, 1, spec_.hidden_dim);
  }

  const LayerSpec& spec() const { return spec_; }
  std::size_t w0() const { return w0_; }
  std::size_t b0() const { return b0_; }
  std::size_t w1() const { return w1_; }
  std::size_t b1() const { return b1_; }

  Var<Scalar> apply(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& input) const {
    detail::require_vector(input, spec_.input_dim, "feedforward input");
    auto hidden = matmul(tape.parameter(params, w0_), input) + tape.parameter(params, b0_);
    if (spec_.hidden_activation == Activation::relu) hidden = relu(hidden);
    return matmul(tape.parameter(params, w1_), hidden) + tape.parameter(params, b1_);
  }

  // Row-batched form: input is n x input_dim, output n x output_dim.
  Var<Scalar> apply_rows(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& rows) const {
    if (rows.cols() != spec_.input_dim) throw DimensionError("feedforward rows: width mismatch");
    auto hidden = add_row_broadcast(matmul_nt(rows, tape.parameter(params, w0_)), tape.parameter(params, b0_));
    if (spec_.hidden_activation == Activation::relu) hidden = relu(hidden);
    return add_row_broadcast(matmul_nt(hidden, tape.parameter(params, w1_)), tape.parameter(params, b1_));
  }

 private:
  LayerSpec spec_;
  std::size_t w0_ = 0, b0_ = 0, w1_ = 0, b1_ = 0;
};

// LSTM cell. The recurrent state is packed as [h; c], so a cell with hidden
// size d carries a 2d state vector; h is the first half.
//   gates = W_in x + W_rec h + b, split as (input, forget, candidate, output)
//   c' = sigmoid(f) * c + sigmoid(i) * tanh(g)
//   h' = sigmoid(o) * tanh(c')
template <typename Scalar>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterSet<Scalar>& params, const std::string& prefix, LayerSpec spec) : spec_(spec) {
    spec_.kind = LayerKind::recurrent_cell;
    spec_.validate();
    const auto d = spec_.output_dim;
    w_input_ = params.add(prefix + ".w_input", 4 * d, spec_.input_dim, d);
    w_recurrent_ = params.add(prefix + ".w_recurrent", 4 * d, d, d);
    bias_ = params.add(prefix + ".bias", 4 * d, 1, d);
  }

  const LayerSpec& spec() const { return spec_; }
  Eigen::Index hidden_dim() const { return spec_.output_dim; }
  Eigen::Index state_dim() const { return 2 * spec_.output_dim; }
  std::size_t w_input() const { return w_input_; }
  std::size_t w_recurrent() const { return w_recurrent_; }
  std::size_t bias() const { return bias_; }

  Var<Scalar> apply(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& input,
                    const Var<Scalar>& state) const {
    const auto d = spec_.output_dim;
    detail::require_vector(input, spec_.input_dim, "recurrent cell input");
    detail::require_vector(state, 2 * d, "recurrent cell state");
    auto h = slice_rows(state, 0, d);
    auto c = slice_rows(state, d, d);
    auto gates = matmul(tape.parameter(params, w_input_), input) + matmul(tape.parameter(params, w_recurrent_), h) +
                 tape.parameter(params, bias_);
    auto input_gate = sigmoid(slice_rows(gates, 0, d));
    auto forget_gate = sigmoid(slice_rows(gates, d, d));
    auto candidate = tanh(slice_rows(gates, 2 * d, d));
    auto output_gate = sigmoid(slice_rows(gates, 3 * d, d));
    auto c_next = cwise_product(forget_gate, c) + cwise_product(input_gate, candidate);
    auto h_next = cwise_product(output_gate, tanh(c_next));
    return concat({h_next, c_next});
  }

  // Row-batched form: inputs n x input_dim, states n x 2d, one node per row.
  Var<Scalar> apply_rows(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& inputs,
                         const Var<Scalar>& states) const {
    const auto d = spec_.output_dim;
    if (inputs.cols() != spec_.input_dim || states.cols() != 2 * d || inputs.rows() != states.rows())
      throw DimensionError("recurrent cell rows: expected n x " + std::to_string(spec_.input_dim) + " inputs and n x " +
                           std::to_string(2 * d) + " states");
    auto h = slice_cols(states, 0, d);
    auto c = slice_cols(states, d, d);
    auto gates = add_row_broadcast(matmul_nt(inputs, tape.parameter(params, w_input_)) +
                                       matmul_nt(h, tape.parameter(params, w_recurrent_)),
                                   tape.parameter(params, bias_));
    auto input_gate = sigmoid(slice_cols(gates, 0, d));
    auto forget_gate = sigmoid(slice_cols(gates, d, d));
    auto candidate = tanh(slice_cols(gates, 2 * d, d));
    auto output_gate = sigmoid(slice_cols(gates, 3 * d, d));
    auto c_next = cwise_product(forget_gate, c) + cwise_product(input_gate, candidate);
    auto h_next = cwise_product(output_gate, tanh(c_next));
    return concat_cols({h_next, c_next});
  }

 private:
  LayerSpec spec_;
  std::size_t w_input_ = 0, w_recurrent_ = 0, bias_ = 0;
};

// Multi-head dot-product attention with learned projections:
//   Q = Wq query, K_j = Wk key_j, V_j = Wv value_j
// followed by attention_core. Output width is spec.output_dim.
template <typename Scalar>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet<Scalar>& params, const std::string& prefix, LayerSpec spec) : spec_(spec) {
    spec_.kind = LayerKind::attention;
    if (spec_.key_dim == 0) spec_.key_dim = spec_.input_dim;
    spec_.validate();
    wq_ = params.add(prefix + ".wq", spec_.output_dim, spec_.input_dim, spec_.input_dim);
    wk_ = params.add(prefix + ".wk", spec_.output_dim, spec_.key_dim, spec_.key_dim);
    wv_ = params.add(prefix + ".wv", spec_.output_dim, spec_.key_dim, spec_.key_dim);
  }

  const LayerSpec& spec() const { return spec_; }
  std::size_t wq() const { return wq_; }
  std::size_t wk() const { return wk_; }
  std::size_t wv() const { return wv_; }

  // keys and values are n x key_dim, one row per entry.
  AttentionResult<Scalar> apply(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& query,
                                const Var<Scalar>& keys, const Var<Scalar>& values) const {
    detail::require_vector(query, spec_.input_dim, "attention query");
    if (keys.cols() != spec_.key_dim || values.cols() != spec_.key_dim || keys.rows() != values.rows())
      throw DimensionError("attention keys/values shape mismatch");
    auto q = matmul(tape.parameter(params, wq_), query);
    auto k = matmul_nt(keys, tape.parameter(params, wk_));
    auto v = matmul_nt(values, tape.parameter(params, wv_));
    return attention_core(q, k, v, spec_.heads);
  }

  // Many queries (m x input_dim), each over its own segment of the key rows.
  SegmentAttentionResult<Scalar> apply_segments(Tape<Scalar>& tape, const ParameterSet<Scalar>& params,
                                                const Var<Scalar>& queries, const Var<Scalar>& keys, const Var<Scalar>& values,
                                                std::vector<Eigen::Index> offsets) const {
    if (queries.cols() != spec_.input_dim) throw DimensionError("attention queries: width mismatch");
    if (keys.cols() != spec_.key_dim || values.cols() != spec_.key_dim || keys.rows() != values.rows())
      throw DimensionError("attention keys/values shape mismatch");
    auto q = matmul_nt(queries, tape.parameter(params, wq_));
    auto k = matmul_nt(keys, tape.parameter(params, wk_));
    auto v = matmul_nt(values, tape.parameter(params, wv_));
    return segment_attention(q, k, v, std::move(offsets), spec_.heads);
  }

  AttentionResult<Scalar> apply(Tape<Scalar>& tape, const ParameterSet<Scalar>& params, const Var<Scalar>& query,
                                std::span<const Var<Scalar>> keys, std::span<const Var<Scalar>> values) const {
    if (keys.size() != values.size()) throw ContractError("attention: keys and values differ in length");
    if (keys.empty()) throw ContractError("attention over an empty key set");
    return apply(tape, params, query, stack_rows(keys), stack_rows(values));
  }

 private:
  LayerSpec spec_;
  std::size_t wq_ = 0, wk_ = 0, wv_ = 0;
};

}  // namespace semba::numeric
