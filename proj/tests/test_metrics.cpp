#include "semba/metrics/metrics.hpp"
#include "support/metric_oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace semba::metrics;
using namespace semba::testing;

TEST_CASE("f1 binary: perfect, all-positive and confusion brute force") {
  CHECK(f1_binary(std::vector<double>{0.9, 0.1, 0.7}, std::vector<int>{1, 0, 1}) == 1.0);
  CHECK(f1_binary(std::vector<double>{0.9, 0.9, 0.9, 0.9}, std::vector<int>{1, 0, 1, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK(f1_binary(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}) == 0.0);
  CHECK(f1_binary(std::vector<double>{0.5}, std::vector<int>{1}) == 1.0);  // threshold inclusive
  CHECK_THROWS_AS(f1_binary(std::vector<double>{0.5}, std::vector<int>{2}), MetricError);
  CHECK_THROWS_AS(f1_binary(std::vector<double>{}, std::vector<int>{}), MetricError);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(50);
    std::vector<int> y(50), pred(50);
    for (int i = 0; i < 50; ++i) {
      s[i] = std::uniform_real_distribution<double>(0, 1)(rng);
      y[i] = static_cast<int>(rng() % 2);
      pred[i] = s[i] >= 0.5;
    }
    CHECK(std::abs(f1_binary(s, y) - f1_of(confusion(pred, y, 1))) <= 1e-9);
  }
}

TEST_CASE("auroc: separated, tied and exhaustive pair counting") {
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}) == 1.0);
  CHECK(auroc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
  // Six points with one cross-class tie at 0.5.
  const std::vector<double> s{0.1, 0.5, 0.5, 0.7, 0.3, 0.9};
  const std::vector<int> y{0, 0, 1, 1, 0, 1};
  const auto frac = auroc_fraction(s, y);
  const auto [num, den] = pair_count(s, y);
  CHECK(frac.twice_u * den == num * frac.twice_pairs);
  CHECK(auroc(s, y) == 8.5 / 9.0);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> sc(50);
    std::vector<int> lab(50);
    for (int i = 0; i < 50; ++i) {
      sc[i] = static_cast<double>(rng() % 12) / 11.0;  // many ties
      lab[i] = i < 2 ? i : static_cast<int>(rng() % 2);
    }
    const auto f = auroc_fraction(sc, lab);
    const auto [n2, d2] = pair_count(sc, lab);
    REQUIRE(f.twice_pairs == d2);
    REQUIRE(f.twice_u == n2);
    // Strictly monotone transforms leave the ranks alone.
    std::vector<double> t(50);
    for (int i = 0; i < 50; ++i) t[i] = std::exp(3 * sc[i]) - 7;
    CHECK(auroc(t, lab) == auroc(sc, lab));
  }
}

TEST_CASE("auroc near one half when labels ignore scores") {
  std::mt19937_64 rng(3);
  std::vector<double> s(20000);
  std::vector<int> y(20000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = std::uniform_real_distribution<double>(0, 1)(rng);
    y[i] = static_cast<int>(rng() % 2);
  }
  CHECK(std::abs(auroc(s, y) - 0.5) < 0.05);
}

TEST_CASE("multiclass f1 against per-class brute force") {
  const std::vector<int> perfect{0, 1, 2, 2, 1};
  for (auto a : {Averaging::macro, Averaging::weighted, Averaging::micro}) CHECK(f1_multiclass(perfect, perfect, a) == 1.0);

  // Skewed: class 0 dominates, class 2 never predicted.
  const std::vector<int> y{0, 0, 0, 0, 0, 0, 1, 1, 2, 2};
  const std::vector<int> p{0, 0, 0, 0, 1, 0, 1, 0, 0, 1};
  const double f0 = f1_of(confusion(p, y, 0)), f1 = f1_of(confusion(p, y, 1)), f2 = f1_of(confusion(p, y, 2));
  CHECK(f1_multiclass(p, y, Averaging::macro) == doctest::Approx((f0 + f1 + f2) / 3).epsilon(1e-12));
  CHECK(f1_multiclass(p, y, Averaging::weighted) == doctest::Approx((6 * f0 + 2 * f1 + 2 * f2) / 10).epsilon(1e-12));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> lab(50), pred(50);
    for (int i = 0; i < 50; ++i) {
      lab[i] = static_cast<int>(rng() % 3);
      pred[i] = rng() % 3 == 0 ? static_cast<int>(rng() % 3) : lab[i];
    }
    std::set<int> classes(lab.begin(), lab.end());
    classes.insert(pred.begin(), pred.end());
    double macro = 0, weighted = 0;
    for (int c : classes) {
      const double f = f1_of(confusion(pred, lab, c));
      macro += f / static_cast<double>(classes.size());
      weighted += f * static_cast<double>(std::count(lab.begin(), lab.end(), c)) / 50.0;
    }
    CHECK(std::abs(f1_multiclass(pred, lab, Averaging::macro) - macro) <= 1e-9);
    CHECK(std::abs(f1_multiclass(pred, lab, Averaging::weighted) - weighted) <= 1e-9);
    CHECK(f1_multiclass(pred, lab, Averaging::micro) == accuracy(pred, lab));
  }
  CHECK(argmax_rows(std::vector<double>{0.1, 0.7, 0.2, 0.5, 0.2, 0.3}, 3) == std::vector<int>{1, 0});
}

TEST_CASE("regression metrics against direct formulas") {
  const std::vector<double> t{-3, 1, 4, 10, -10};
  auto m = regression_metrics(t, t);
  CHECK(m.rmse == 0.0);
  CHECK(m.r2.defined);
  CHECK(m.r2.value == 1.0);
  CHECK(m.kl == 0.0);

  const std::vector<double> mean(5, 0.4);
  CHECK(r_squared(mean, t).value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{-1, 1}) == 1.0);
  CHECK_FALSE(r_squared(std::vector<double>{1, 2}, std::vector<double>{3, 3}).defined);

  const auto h = weight_histograms(std::vector<double>{1.4, 1.6, -2.5}, std::vector<double>{1, 2, 2});
  CHECK(h.lo == -3);
  CHECK(h.hi == 2);
  CHECK(h.actual == std::vector<double>{0, 0, 0, 0, 1, 2});
  CHECK(h.predicted == std::vector<double>{1, 0, 0, 0, 1, 1});

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pred(50), targ(50);
    for (int i = 0; i < 50; ++i) {
      targ[i] = std::round(std::uniform_real_distribution<double>(-10, 10)(rng));
      pred[i] = targ[i] + std::normal_distribution<double>(0, 2)(rng);
    }
    double ss = 0, mu = 0, tot = 0;
    for (int i = 0; i < 50; ++i) mu += targ[i] / 50;
    for (int i = 0; i < 50; ++i) {
      ss += (pred[i] - targ[i]) * (pred[i] - targ[i]);
      tot += (targ[i] - mu) * (targ[i] - mu);
    }
    // Histogram KL by hand over the union range of rounded values.
    std::map<long, double> ca, cp;
    long lo = 1000, hi = -1000;
    for (int i = 0; i < 50; ++i) {
      ca[std::lround(targ[i])] += 1;
      cp[std::lround(pred[i])] += 1;
      lo = std::min({lo, std::lround(targ[i]), std::lround(pred[i])});
      hi = std::max({hi, std::lround(targ[i]), std::lround(pred[i])});
    }
    const double bins = static_cast<double>(hi - lo + 1);
    double kl = 0;
    for (long b = lo; b <= hi; ++b) {
      const double p = (ca[b] / 50 + 1e-6) / (1 + bins * 1e-6);
      const double q = (cp[b] / 50 + 1e-6) / (1 + bins * 1e-6);
      kl += p * std::log(p / q);
    }
    const auto r = regression_metrics(pred, targ);
    CHECK(std::abs(r.rmse - std::sqrt(ss / 50)) <= 1e-9);
    CHECK(std::abs(r.r2.value - (1 - ss / tot)) <= 1e-9);
    CHECK(std::abs(r.kl - kl) <= 1e-9);
    CHECK(r.kl >= 0.0);
  }
}
