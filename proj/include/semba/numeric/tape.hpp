#pragma once

#include "semba/numeric/parameters.hpp"
#include "semba/numeric/tensor.hpp"

#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace semba::numeric {

template <typename Scalar>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
template <typename Scalar>
class Var {
 public:
  using Matrix = MatrixX<Scalar>;

  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }

  const Matrix& value() const { return tape_->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Eigen::Index size() const { return value().size(); }
  bool requires_grad() const { return tape_->requires_grad(*this); }
  Scalar item() const {
    if (size() != 1) throw DimensionError("item() on non-scalar " + shape_string(rows(), cols()));
    return value()(0, 0);
  }

 private:
  friend class Tape<Scalar>;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in creation order, which is also a
// topological order, so backward() replays them in reverse.
template <typename Scalar>
class Tape {
 public:
  using Matrix = MatrixX<Scalar>;
  using VarT = Var<Scalar>;
  // Receives the gradient flowing into the node and pushes it to parents.
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

  VarT constant(Matrix value) { return push(std::move(value), false, {}); }

  VarT leaf(const Tensor<Scalar>& tensor) {
    return push(tensor.values(), tensor.requires_grad() && grad_enabled_, {});
  }

  // Differentiable leaf from raw values; rejects NaN/Inf like Tensor does.
  VarT variable(Matrix value) {
    if (!value.allFinite()) throw NumericError("tape leaf contains NaN or Inf");
    return push(std::move(value), grad_enabled_, {});
  }

  // Leaf bound to params[index]; one node per parameter per tape.
  VarT parameter(const ParameterSet<Scalar>& params, std::size_t index) {
    if (bound_ && bound_ != &params) throw ContractError("tape already bound to another ParameterSet");
    bound_ = &params;
    auto it = param_nodes_.find(index);
    if (it != param_nodes_.end()) return VarT(this, it->second);
    VarT v = push(params[index].value, grad_enabled_, {});
    param_nodes_.emplace(index, v.id());
    return v;
  }

  // Records an op result. The backward closure is kept only when some parent
  // needs a gradient.
  VarT record(Matrix value, std::initializer_list<VarT> parents, BackwardFn backward) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id()].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
  }

  VarT record(Matrix value, const std::vector<VarT>& parents, BackwardFn backward) {
    bool needs = false;
    for (const auto& p : parents) {
      check_owner(p);
      needs = needs || nodes_[p.id()].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
  }

  const Matrix& value(const VarT& v) const {
    check_owner(v);
    return nodes_[v.id()].value;
  }

  bool requires_grad(const VarT& v) const {
    check_owner(v);
    return nodes_[v.id()].requires_grad;
  }

  // Gradient accumulated into v by the last backward(); zero when v was not
  // reached.
  Matrix grad(const VarT& v) const {
    check_owner(v);
    const auto& n = nodes_[v.id()];
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Derived>
  void accumulate(const VarT& v, const Eigen::MatrixBase<Derived>& g) {
    auto& n = nodes_[v.id()];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void backward(const VarT& loss) {
    check_owner(loss);
    if (loss.size() != 1) throw ContractError("backward() needs a scalar loss, got " + shape_string(loss.rows(), loss.cols()));
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[loss.id()].requires_grad) return;
    nodes_[loss.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.backward || n.grad.size() == 0) continue;
      // Parents always precede i, so the closure never touches nodes_[i].grad.
      n.backward(*this, n.grad);
    }
  }

  // Parameter gradients after backward(); zeros for parameters the loss did
  // not depend on.
  GradientMap<Scalar> gradients(const ParameterSet<Scalar>& params) const {
    auto out = params.zero_gradients();
    if (bound_ && bound_ != &params) throw ContractError("gradients() requested for a different ParameterSet");
    for (const auto& [index, node] : param_nodes_) {
      if (nodes_[node].grad.size() != 0) out[index] = nodes_[node].grad;
    }
    return out;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  VarT push(Matrix value, bool requires_grad, BackwardFn backward) {
    nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backward)});
    return VarT(this, nodes_.size() - 1);
  }

  void check_owner(const VarT& v) const {
    if (v.tape() != this || v.id() >= nodes_.size()) throw ContractError("Var does not belong to this tape");
  }

  bool grad_enabled_;
  std::vector<Node> nodes_;
  std::unordered_map<std::size_t, std::size_t> param_nodes_;
  const ParameterSet<Scalar>* bound_ = nullptr;
};

}  // namespace semba::numeric
