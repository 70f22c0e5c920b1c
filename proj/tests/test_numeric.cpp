#include "doctest.h"

#include "semba/numeric.hpp"
#include "support/finite_difference.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

using namespace semba;
using numeric::Activation;
using numeric::LayerKind;
using numeric::LayerSpec;

namespace {

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

// Straight-line y = W x + b with explicit loops.
std::vector<double> affine_oracle(const Matrix& w, const Matrix& b, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = b(r, 0);
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
  return y;
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("tensor leaves reject non-finite values and check shape") {
  Vector v(2);
  v << 1.0, std::nan("");
  CHECK_THROWS_AS(Tensor::vector(v), numeric::NumericError);
  auto t = Tensor::zeros({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(Tensor::scalar(3.0).rank() == 0);
  Tape tape;
  Matrix bad(1, 1);
  bad(0, 0) = INFINITY;
  CHECK_THROWS_AS(tape.variable(bad), numeric::NumericError);
}

TEST_CASE("backward: analytic derivative and disconnected leaves") {
  Tape tape;
  Matrix three(1, 1);
  three(0, 0) = 3.0;
  auto x = tape.variable(three);
  auto unused = tape.variable(three);
  auto loss = numeric::dot(x, x);
  tape.backward(loss);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(tape.grad(unused)(0, 0) == 0.0);

  auto vec = tape.variable(Matrix::Ones(3, 1));
  CHECK_THROWS_AS(tape.backward(vec), numeric::ContractError);
}

TEST_CASE("backward: non-participating parameters get zero gradient") {
  ParameterSet params;
  auto a = params.add("a", 2, 1, 1);
  auto b = params.add("b", 2, 1, 1);
  params.initialize_uniform(4);
  Tape tape;
  auto loss = numeric::sum(numeric::square(tape.parameter(params, a)));
  tape.backward(loss);
  auto grads = tape.gradients(params);
  CHECK(grads[b].isZero());
  CHECK(grads[a].isApprox(2.0 * params[a].value));
}

TEST_CASE("feedforward: zero-weight, identity and oracle cases") {
  ParameterSet params;
  LayerSpec spec{LayerKind::feedforward, 3, 3, 3, 1, Activation::identity};
  numeric::Feedforward<double> net(params, "ff", spec);

  SUBCASE("zero weights return the output bias") {
    params.zero_values();
    params[net.b1()].value << 0.5, -1.0, 2.0;
    Tape tape;
    auto out = net.apply(tape, params, tape.constant(Matrix::Constant(3, 1, 7.0)));
    CHECK(out.value().isApprox(params[net.b1()].value));
  }

  SUBCASE("identity weights with linear activation pass the input through") {
    params.zero_values();
    params[net.w0()].value = Matrix::Identity(3, 3);
    params[net.w1()].value = Matrix::Identity(3, 3);
    Matrix v(3, 1);
    v << -2.0, 0.25, 9.0;
    Tape tape;
    auto out = net.apply(tape, params, tape.constant(v));
    CHECK(out.value() == v);
  }

  SUBCASE("shape mismatch") {
    Tape tape;
    CHECK_THROWS_AS(net.apply(tape, params, tape.constant(Matrix::Zero(2, 1))), numeric::DimensionError);
  }
}

TEST_CASE("feedforward: random 3->2 net matches hand-rolled matmul") {
  ParameterSet params;
  numeric::Feedforward<double> net(params, "ff", LayerSpec{LayerKind::feedforward, 3, 2, 2});
  params.initialize_uniform(11);
  std::mt19937_64 rng(5);
  Vector x = random_vector(rng, 3);

  std::vector<double> xs(x.data(), x.data() + 3);
  auto hidden = affine_oracle(params[net.w0()].value, params[net.b0()].value, xs);
  for (auto& h : hidden) h = h > 0 ? h : 0;
  auto expected = affine_oracle(params[net.w1()].value, params[net.b1()].value, hidden);

  Tape tape;
  auto out = net.apply(tape, params, tape.constant(Matrix(x)));
  REQUIRE(out.rows() == 2);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(out.value()(i, 0) - expected[static_cast<std::size_t>(i)]) < 1e-12);

  // Row-batched application agrees with the vector form.
  Matrix rows(2, 3);
  rows.row(0) = x.transpose();
  rows.row(1) = -x.transpose();
  auto batched = net.apply_rows(tape, params, tape.constant(rows));
  CHECK((batched.value().row(0).transpose() - out.value()).norm() < 1e-14);
}

TEST_CASE("recurrent cell: zero fixed point, determinism, gate oracle") {
  ParameterSet params;
  numeric::LstmCell<double> cell(params, "mem", LayerSpec{LayerKind::recurrent_cell, 3, 4});
  std::mt19937_64 rng(9);
  Matrix input = random_vector(rng, 3);
  Matrix state = random_vector(rng, 8);

  SUBCASE("zero parameters give a zero state") {
    params.zero_values();
    Tape tape;
    auto next = cell.apply(tape, params, tape.constant(input), tape.constant(Matrix::Zero(8, 1)));
    CHECK(next.value().isZero(0.0));
  }

  params.initialize_uniform(21);

  SUBCASE("deterministic") {
    Tape t1, t2;
    auto a = cell.apply(t1, params, t1.constant(input), t1.constant(state));
    auto b = cell.apply(t2, params, t2.constant(input), t2.constant(state));
    CHECK(a.value() == b.value());
  }

  SUBCASE("matches the gate equations evaluated directly") {
    const int d = 4;
    const Matrix& wi = params[cell.w_input()].value;
    const Matrix& wr = params[cell.w_recurrent()].value;
    const Matrix& bias = params[cell.bias()].value;
    std::vector<double> pre(4 * d);
    for (int r = 0; r < 4 * d; ++r) {
      double acc = bias(r, 0);
      for (int c = 0; c < 3; ++c) acc += wi(r, c) * input(c, 0);
      for (int c = 0; c < d; ++c) acc += wr(r, c) * state(c, 0);
      pre[static_cast<std::size_t>(r)] = acc;
    }
    Tape tape;
    auto next = cell.apply(tape, params, tape.constant(input), tape.constant(state));
    for (int k = 0; k < d; ++k) {
      const double ig = sigmoid_scalar(pre[static_cast<std::size_t>(k)]);
      const double fg = sigmoid_scalar(pre[static_cast<std::size_t>(d + k)]);
      const double cand = std::tanh(pre[static_cast<std::size_t>(2 * d + k)]);
      const double og = sigmoid_scalar(pre[static_cast<std::size_t>(3 * d + k)]);
      const double c_next = fg * state(d + k, 0) + ig * cand;
      const double h_next = og * std::tanh(c_next);
      CHECK(std::abs(next.value()(k, 0) - h_next) < 1e-12);
      CHECK(std::abs(next.value()(d + k, 0) - c_next) < 1e-12);
      CHECK(std::abs(next.value()(k, 0)) < 1.0);
    }
  }
}

TEST_CASE("attention: singleton, symmetric and formula oracle") {
  ParameterSet params;
  numeric::MultiHeadAttention<double> attn(params, "attn", LayerSpec{LayerKind::attention, 4, 4, 0, 2});
  params.initialize_uniform(3);
  std::mt19937_64 rng(17);
  Matrix query = random_vector(rng, 4);

  SUBCASE("one key gives weight 1 and the projected value") {
    Tape tape;
    Matrix kv = random_vector(rng, 4);
    std::vector<Var> keys{tape.constant(kv)};
    auto res = attn.apply(tape, params, tape.constant(query), keys, keys);
    CHECK(res.weights.isApproxToConstant(1.0));
    CHECK((res.output.value() - params[attn.wv()].value * kv).norm() < 1e-14);
  }

  SUBCASE("equal logits spread weight evenly") {
    Tape tape;
    Matrix kv = random_vector(rng, 4);
    std::vector<Var> keys(5, tape.constant(kv));
    auto res = attn.apply(tape, params, tape.constant(query), keys, keys);
    for (Eigen::Index i = 0; i < res.weights.size(); ++i) CHECK(res.weights.data()[i] == doctest::Approx(0.2).epsilon(1e-12));
  }

  SUBCASE("three keys match explicit softmax(QK^T/sqrt(d))V") {
    Matrix keys_m(3, 4), values_m(3, 4);
    for (int j = 0; j < 3; ++j) {
      keys_m.row(j) = random_vector(rng, 4).transpose();
      values_m.row(j) = random_vector(rng, 4).transpose();
    }
    const Matrix& wq = params[attn.wq()].value;
    const Matrix& wk = params[attn.wk()].value;
    const Matrix& wv = params[attn.wv()].value;
    double q[4] = {}, k[3][4] = {}, v[3][4] = {};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) q[r] += wq(r, c) * query(c, 0);
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 4; ++c) {
          k[j][r] += wk(r, c) * keys_m(j, c);
          v[j][r] += wv(r, c) * values_m(j, c);
        }
    }
    double expected[4] = {};
    double weights[2][3] = {};
    for (int h = 0; h < 2; ++h) {
      double logits[3], z = 0;
      for (int j = 0; j < 3; ++j) {
        logits[j] = (q[2 * h] * k[j][2 * h] + q[2 * h + 1] * k[j][2 * h + 1]) / std::sqrt(2.0);
        z += std::exp(logits[j]);
      }
      for (int j = 0; j < 3; ++j) {
        weights[h][j] = std::exp(logits[j]) / z;
        expected[2 * h] += weights[h][j] * v[j][2 * h];
        expected[2 * h + 1] += weights[h][j] * v[j][2 * h + 1];
      }
    }
    Tape tape;
    auto res = attn.apply(tape, params, tape.constant(query), tape.constant(keys_m), tape.constant(values_m));
    for (int r = 0; r < 4; ++r) CHECK(std::abs(res.output.value()(r, 0) - expected[r]) < 1e-12);
    for (int h = 0; h < 2; ++h) {
      CHECK(std::abs(res.weights.row(h).sum() - 1.0) < 1e-9);
      for (int j = 0; j < 3; ++j) CHECK(std::abs(res.weights(h, j) - weights[h][j]) < 1e-12);
    }
  }

  SUBCASE("empty key set is a contract violation") {
    Tape tape;
    std::vector<Var> none;
    CHECK_THROWS_AS(attn.apply(tape, params, tape.constant(query), none, none), numeric::ContractError);
  }
}

TEST_CASE("gradient check: every layer kind against central differences") {
  std::mt19937_64 rng(101);
  ParameterSet params;
  numeric::Feedforward<double> ff(params, "ff", LayerSpec{LayerKind::feedforward, 5, 4, 4});
  numeric::LstmCell<double> cell(params, "cell", LayerSpec{LayerKind::recurrent_cell, 4, 3});
  numeric::MultiHeadAttention<double> attn(params, "attn", LayerSpec{LayerKind::attention, 6, 4, 0, 2, Activation::relu, 5});
  params.initialize_uniform(77);
  const Matrix x = random_vector(rng, 5);
  const Matrix state = random_vector(rng, 6);
  Matrix keys(4, 5);
  for (int j = 0; j < 4; ++j) keys.row(j) = random_vector(rng, 5).transpose();
  const Matrix readout = random_vector(rng, 4);

  auto forward = [&](Tape& tape, const ParameterSet& p) {
    auto hidden = ff.apply(tape, p, tape.constant(x));
    auto next = cell.apply(tape, p, hidden, tape.constant(state));   // 6-dim packed state
    auto res = attn.apply(tape, p, next, tape.constant(keys), tape.constant(keys));
    return numeric::dot(numeric::tanh(res.output), tape.constant(readout));
  };

  Tape tape;
  auto loss = forward(tape, params);
  tape.backward(loss);
  auto grads = tape.gradients(params);
  auto report = testing::check_gradients(params, grads, [&](const ParameterSet& p) {
    Tape t(false);
    return forward(t, p).item();
  });
  INFO(report.worst);
  CHECK(report.failures == 0);
  CHECK(report.checked == static_cast<std::size_t>(params.scalar_count()));
}

TEST_CASE("row-batched forms agree with the per-vector layers") {
  std::mt19937_64 rng(31);
  ParameterSet params;
  numeric::LstmCell<double> cell(params, "cell", LayerSpec{LayerKind::recurrent_cell, 5, 3});
  numeric::MultiHeadAttention<double> attn(params, "attn", LayerSpec{LayerKind::attention, 4, 6, 0, 3, Activation::relu, 5});
  params.initialize_uniform(5);
  Matrix inputs(4, 5), states(4, 6), queries(3, 4), keys(7, 5);
  for (int r = 0; r < 4; ++r) {
    inputs.row(r) = random_vector(rng, 5).transpose();
    states.row(r) = random_vector(rng, 6).transpose();
  }
  for (int r = 0; r < 3; ++r) queries.row(r) = random_vector(rng, 4).transpose();
  for (int r = 0; r < 7; ++r) keys.row(r) = random_vector(rng, 5).transpose();

  Tape tape(false);
  const Matrix rows = cell.apply_rows(tape, params, tape.constant(inputs), tape.constant(states)).value();
  for (int r = 0; r < 4; ++r) {
    const Matrix one = cell.apply(tape, params, tape.constant(inputs.row(r).transpose()), tape.constant(states.row(r).transpose())).value();
    CHECK((rows.row(r).transpose() - one).cwiseAbs().maxCoeff() < 1e-14);
  }

  // Segments [0,3), [3,3) and [3,7): the empty one yields a zero row.
  const std::vector<Eigen::Index> offsets{0, 3, 3, 7};
  auto seg = attn.apply_segments(tape, params, tape.constant(queries), tape.constant(keys), tape.constant(keys), offsets);
  CHECK(seg.output.value().row(1).isZero(0.0));
  for (int i : {0, 2}) {
    const auto begin = offsets[static_cast<std::size_t>(i)];
    const auto len = offsets[static_cast<std::size_t>(i) + 1] - begin;
    const Matrix k = keys.middleRows(begin, len);
    auto single = attn.apply(tape, params, tape.constant(queries.row(i).transpose()), tape.constant(k), tape.constant(k));
    CHECK((seg.output.value().row(i).transpose() - single.output.value()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((seg.weights.middleRows(begin, len).transpose() - single.weights).cwiseAbs().maxCoeff() < 1e-13);
    for (int h = 0; h < 3; ++h) CHECK(seg.weights.block(begin, h, len, 1).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(attn.apply_segments(tape, params, tape.constant(queries), tape.constant(keys), tape.constant(keys), {0, 3, 7}),
                  numeric::DimensionError);
}

TEST_CASE("gradient check: row gather, overwrite and segmented attention") {
  std::mt19937_64 rng(202);
  ParameterSet params;
  auto table = params.add("table", 5, 4, 4);
  auto fresh = params.add("fresh", 2, 4, 4);
  numeric::LstmCell<double> cell(params, "cell", LayerSpec{LayerKind::recurrent_cell, 4, 2});
  numeric::MultiHeadAttention<double> attn(params, "attn", LayerSpec{LayerKind::attention, 4, 4, 0, 2, Activation::relu, 5});
  params.initialize_uniform(9);
  Matrix states(3, 4), extra(6, 1), readout(3, 4);
  for (int r = 0; r < 3; ++r) {
    states.row(r) = random_vector(rng, 4).transpose();
    readout.row(r) = random_vector(rng, 4).transpose();
  }
  for (int r = 0; r < 6; ++r) extra(r, 0) = random_vector(rng, 1)(0);

  auto forward = [&](Tape& tape, const ParameterSet& p) {
    auto live = numeric::overwrite_rows(tape.parameter(p, table), {3, 0}, tape.parameter(p, fresh));
    auto stepped = cell.apply_rows(tape, p, numeric::gather_rows(live, {1, 3, 3}), tape.constant(states));
    auto queries = numeric::gather_rows(live, {0, 2, 4});
    auto keys = numeric::concat_cols({numeric::gather_rows(live, {0, 1, 2, 3, 4, 3}), tape.constant(extra)});
    auto res = attn.apply_segments(tape, p, queries, keys, keys, {0, 2, 2, 6});
    auto out = res.output + numeric::slice_cols(stepped, 0, 4);
    return numeric::sum(numeric::cwise_product(numeric::tanh(out), tape.constant(readout)));
  };
  Tape tape;
  auto loss = forward(tape, params);
  tape.backward(loss);
  auto report = testing::check_gradients(params, tape.gradients(params), [&](const ParameterSet& p) {
    Tape t(false);
    return forward(t, p).item();
  });
  INFO(report.worst);
  CHECK(report.failures == 0);
  CHECK(report.checked == static_cast<std::size_t>(params.scalar_count()));
  Tape t;
  CHECK_THROWS_AS(numeric::overwrite_rows(t.parameter(params, table), {1, 1}, t.parameter(params, fresh)), numeric::ContractError);
}

TEST_CASE("gradient check: loss ops") {
  ParameterSet params;
  auto w = params.add("w", 6, 3, 3);
  params.initialize_uniform(8);
  std::mt19937_64 rng(2);
  Matrix input(3, 1);
  input << 0.3, -0.7, 1.1;
  std::vector<double> bce_labels{1, 0, 1, 1, 0, 0};
  std::vector<int> ce_labels{2, 0};
  std::vector<double> targets{1.5, -2.0, 0.25, 3.0, -1.0, 0.0};

  auto forward = [&](Tape& tape, const ParameterSet& p) {
    auto logits = numeric::matmul(tape.parameter(p, w), tape.constant(input));
    auto bce = numeric::bce_with_logits<double>(logits, bce_labels);
    auto rows = numeric::stack_rows<double>(std::vector<Var>{numeric::slice_rows(logits, 0, 3), numeric::slice_rows(logits, 3, 3)});
    auto ce = numeric::softmax_cross_entropy<double>(rows, ce_labels);
    auto rmse = numeric::rmse_loss<double>(logits, targets);
    return bce + ce + rmse;
  };
  Tape tape;
  auto loss = forward(tape, params);
  tape.backward(loss);
  auto report = testing::check_gradients(params, tape.gradients(params), [&](const ParameterSet& p) {
    Tape t(false);
    return forward(t, p).item();
  });
  INFO(report.worst);
  CHECK(report.failures == 0);
}

TEST_CASE("adam: zero gradient, first step formula, quadratic descent") {
  ParameterSet params;
  auto w = params.add("w", 2, 1, 1);
  params[w].value << 1.0, -2.0;

  SUBCASE("zero gradients leave parameters and moments unchanged") {
    const Matrix before = params[w].value;
    numeric::adam_step(params, params.zero_gradients(), 0.1);
    CHECK(params[w].value == before);
    CHECK(params[w].first_moment.isZero(0.0));
    CHECK(params[w].second_moment.isZero(0.0));
    CHECK(params.step() == 1);
  }

  SUBCASE("first step matches the bias-corrected formula") {
    GradientMap g{Matrix(2, 1)};
    g[0] << 0.5, -3.0;
    const double lr = 0.01;
    numeric::adam_step(params, g, lr);
    for (int i = 0; i < 2; ++i) {
      const double gi = g[0](i, 0);
      const double m = (1 - 0.9) * gi, v = (1 - 0.999) * gi * gi;
      const double mhat = m / (1 - 0.9), vhat = v / (1 - 0.999);
      const double expected = (i == 0 ? 1.0 : -2.0) - lr * mhat / (std::sqrt(vhat) + 1e-8);
      CHECK(std::abs(params[w].value(i, 0) - expected) < 1e-15);
    }
  }

  SUBCASE("two steps decrease a convex quadratic monotonically") {
    auto loss_of = [&] { return params[w].value.squaredNorm(); };
    double prev = loss_of();
    for (int s = 0; s < 2; ++s) {
      GradientMap g{2.0 * params[w].value};
      numeric::adam_step(params, g, 0.05);
      const double now = loss_of();
      CHECK(now < prev);
      prev = now;
    }
  }

  SUBCASE("NaN gradient aborts naming the parameter") {
    GradientMap g{Matrix::Constant(2, 1, std::nan(""))};
    try {
      numeric::adam_step(params, g, 0.1);
      FAIL("expected NumericError");
    } catch (const numeric::NumericError& e) {
      CHECK(std::string(e.what()).find("'w'") != std::string::npos);
    }
  }
}

TEST_CASE("parameter checkpoints round-trip bit-exactly") {
  ParameterSet params;
  numeric::LstmCell<double> cell(params, "mem", LayerSpec{LayerKind::recurrent_cell, 3, 2});
  params.initialize_uniform(1234);
  params[0].value(0, 0) = 1e-300;
  params[0].value(1, 0) = -0.1;
  params.set_step(17);
  std::stringstream buf;
  numeric::write_parameters(buf, params);
  auto loaded = numeric::read_parameters<double>(buf);
  CHECK(loaded.step() == 17);
  CHECK(loaded.checksum() == params.checksum());
  REQUIRE(loaded.same_layout(params));
  for (std::size_t i = 0; i < params.size(); ++i) CHECK(loaded[i].value == params[i].value);

  std::stringstream bad("semba-parameters 99\n");
  CHECK_THROWS(numeric::read_parameters<double>(bad));
}
