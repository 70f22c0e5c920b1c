#pragma once

#include "semba/numeric/tensor.hpp"

#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace semba::numeric {

template <typename Scalar>
struct Parameter {
  std::string name;
  MatrixX<Scalar> value;
  MatrixX<Scalar> first_moment;
  MatrixX<Scalar> second_moment;
  Eigen::Index fan_in = 1;
};

/// One gradient per parameter, aligned with ParameterSet indices.
template <typename Scalar>
using GradientMap = std::vector<MatrixX<Scalar>>;

// Named, ordered collection of learnable matrices plus Adam state. Indices are
// stable, so layers refer to their weights by index and a ParameterSet can be
// copied freely (best-epoch snapshots, checkpoints).
template <typename Scalar>
class ParameterSet {
 public:
  using Matrix = MatrixX<Scalar>;

  std::size_t add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
    if (rows <= 0 || cols <= 0) throw DimensionError("parameter '" + name + "' needs positive dims");
    if (by_name_.count(name)) throw ContractError("duplicate parameter '" + name + "'");
    Parameter<Scalar> p;
    p.name = name;
    p.value = Matrix::Zero(rows, cols);
    p.first_moment = Matrix::Zero(rows, cols);
    p.second_moment = Matrix::Zero(rows, cols);
    p.fan_in = fan_in;
    by_name_.emplace(name, items_.size());
    items_.push_back(std::move(p));
    return items_.size() - 1;
  }

  std::size_t size() const { return items_.size(); }
  Parameter<Scalar>& operator[](std::size_t i) { return items_.at(i); }
  const Parameter<Scalar>& operator[](std::size_t i) const { return items_.at(i); }

  std::size_t index(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) {
    if (s < 0) throw ContractError("negative optimizer step");
    step_ = s;
  }

  Eigen::Index scalar_count() const {
    Eigen::Index n = 0;
    for (const auto& p : items_) n += p.value.size();
    return n;
  }

  // Uniform in +-1/sqrt(fan_in), drawn in registration order.
  void initialize_uniform(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& p : items_) {
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(p.fan_in));
      std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Scalar>(dist(rng));
      p.first_moment.setZero();
      p.second_moment.setZero();
    }
    step_ = 0;
  }

  void zero_values() {
    for (auto& p : items_) p.value.setZero();
  }

  GradientMap<Scalar> zero_gradients() const {
    GradientMap<Scalar> g;
    g.reserve(items_.size());
    for (const auto& p : items_) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    return g;
  }

  // FNV-1a over names, shapes and raw value bytes.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 1099511628211ULL;
      }
    };
    for (const auto& p : items_) {
      mix(p.name.data(), p.name.size());
      Eigen::Index dims[2] = {p.value.rows(), p.value.cols()};
      mix(dims, sizeof(dims));
      mix(p.value.data(), sizeof(Scalar) * static_cast<std::size_t>(p.value.size()));
    }
    return h;
  }

  bool same_layout(const ParameterSet& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      if (items_[i].name != other.items_[i].name || items_[i].value.rows() != other.items_[i].value.rows() ||
          items_[i].value.cols() != other.items_[i].value.cols())
        return false;
    }
    return true;
  }

 private:
  std::vector<Parameter<Scalar>> items_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::int64_t step_ = 0;
};

// Checkpoint text format, values as hexfloats so the round trip is bit-exact:
//
//   semba-parameters 1
//   step <n>
//   count <k>
//   <name> <rows> <cols> <fan_in>
//   <rows*cols hexfloats, row-major>
//   ...
inline constexpr const char* kParameterMagic = "semba-parameters";
inline constexpr int kParameterVersion = 1;

namespace detail {

inline std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

inline double parse_hexfloat(const std::string& token) {
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw std::runtime_error("bad numeric token '" + token + "'");
  return v;
}

}  // namespace detail

template <typename Scalar>
void write_parameters(std::ostream& out, const ParameterSet<Scalar>& params) {
  out << kParameterMagic << ' ' << kParameterVersion << '\n';
  out << "step " << params.step() << '\n';
  out << "count " << params.size() << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << ' ' << p.fan_in << '\n';
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        if (r || c) out << ' ';
        out << detail::hexfloat(static_cast<double>(p.value(r, c)));
      }
    }
    out << '\n';
  }
}

template <typename Scalar>
ParameterSet<Scalar> read_parameters(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kParameterMagic)
    throw std::runtime_error("not a parameter checkpoint");
  if (version != kParameterVersion)
    throw std::runtime_error("unsupported parameter checkpoint version " + std::to_string(version));
  std::string key;
  std::int64_t step = 0;
  std::size_t count = 0;
  if (!(in >> key >> step) || key != "step") throw std::runtime_error("checkpoint: missing step");
  if (!(in >> key >> count) || key != "count") throw std::runtime_error("checkpoint: missing count");
  ParameterSet<Scalar> params;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name;
    Eigen::Index rows = 0, cols = 0, fan_in = 0;
    if (!(in >> name >> rows >> cols >> fan_in)) throw std::runtime_error("checkpoint: truncated header");
    auto idx = params.add(name, rows, cols, fan_in);
    auto& value = params[idx].value;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string token;
        if (!(in >> token)) throw std::runtime_error("checkpoint: truncated values for " + name);
        value(r, c) = static_cast<Scalar>(detail::parse_hexfloat(token));
      }
    }
  }
  params.set_step(step);
  return params;
}

// Copies values from a loaded checkpoint into params, checking the layout.
template <typename Scalar>
void load_values(ParameterSet<Scalar>& params, const ParameterSet<Scalar>& loaded) {
  if (!params.same_layout(loaded)) throw DimensionError("checkpoint layout does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = loaded[i].value;
  params.set_step(loaded.step());
}

}  // namespace semba::numeric
