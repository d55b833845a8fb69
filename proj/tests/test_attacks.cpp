#include "advntk/attacks.hpp"

#include "advntk/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace advntk;
using namespace advntk::testutil;

TEST_SUITE("attacks") {

TEST_CASE("zero radius returns the input unchanged") {
  PgdConfig cfg;
  cfg.rho = 0.0;
  const Vec x = (Vec(3) << 0.1, -2.0, 5.0).finished();
  const Vec out = pgd_linf(
      x, Vec::Zero(1), [](const Vec& v, const Vec&) { return Vec::Ones(v.size()); },
      cfg);
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("one step on a scalar linear model matches the hand computation") {
  Philox rng(41);
  const int d = 5;
  const Vec w = random_vec(rng, d);
  const Vec x = random_vec(rng, d);
  const double target = w.dot(x) + 1.0;  // residual is negative
  PgdConfig cfg;
  cfg.rho = 0.3;
  cfg.steps_K = 1;
  cfg.alpha = 0.05;

  auto grad = [&](const Vec& v, const Vec& y) {
    return (w * (w.dot(v) - y(0))).eval();
  };
  const Vec got = pgd_linf(x, Vec::Constant(1, target), grad, cfg);
  Vec want = x;
  for (int j = 0; j < d; ++j) {
    const double g = w(j) * (w.dot(x) - target);
    want(j) += cfg.alpha * (g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0));
  }
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ascent property on random convex quadratics") {
  Philox rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 4;
    const Mat r = random_mat(rng, d, d);
    const Mat p = r * r.transpose() + 0.1 * Mat::Identity(d, d);
    const Vec z = random_vec(rng, d);
    const Vec x = random_vec(rng, d);
    auto loss = [&](const Vec& v) { return 0.5 * (v - z).dot(p * (v - z)); };
    auto grad = [&](const Vec& v, const Vec&) { return (p * (v - z)).eval(); };

    PgdConfig cfg;
    cfg.rho = 0.2;
    cfg.steps_K = 10;
    const Vec adv = pgd_linf(x, Vec::Zero(1), grad, cfg);
    CHECK(loss(adv) >= loss(x) - 1e-12);
  }
}

TEST_CASE("randomized contract check: exact ball and box membership") {
  Philox rng(43);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_below(6));
    const Vec x = random_vec(rng, d, 2.0);
    PgdConfig cfg;
    cfg.rho = rng.uniform() * 0.5;
    cfg.steps_K = 1 + static_cast<int>(rng.next_below(10));
    const bool boxed = rng.uniform() < 0.5;
    if (boxed) {
      cfg.has_clamp_box = true;
      cfg.clamp_lo = -1.5;
      cfg.clamp_hi = 1.5;
    }
    const std::uint64_t gseed = rng.next_u64();
    auto grad = [&](const Vec& v, const Vec&) {
      Philox g(gseed);
      Vec out(v.size());
      for (int i = 0; i < v.size(); ++i) out(i) = g.gaussian() + v(i);
      return out;
    };
    Vec xin = x;
    if (boxed)
      for (int i = 0; i < d; ++i) xin(i) = std::clamp(xin(i), cfg.clamp_lo, cfg.clamp_hi);
    const Vec adv = pgd_linf(xin, Vec::Zero(1), grad, cfg);
    for (int i = 0; i < d; ++i) {
      CHECK(std::abs(adv(i) - xin(i)) <= cfg.rho);
      if (boxed) {
        CHECK(adv(i) >= cfg.clamp_lo);
        CHECK(adv(i) <= cfg.clamp_hi);
      }
    }
  }
}

TEST_CASE("deterministic without random start") {
  Philox rng(44);
  const Vec x = random_vec(rng, 4);
  PgdConfig cfg;
  cfg.rho = 0.25;
  auto grad = [](const Vec& v, const Vec&) { return (2.0 * v).eval(); };
  const Vec a = pgd_linf(x, Vec::Zero(1), grad, cfg);
  const Vec b = pgd_linf(x, Vec::Zero(1), grad, cfg);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero gradient leaves the iterate in place") {
  const Vec x = (Vec(3) << 1.0, 2.0, 3.0).finished();
  PgdConfig cfg;
  cfg.rho = 0.5;
  const Vec out = pgd_linf(
      x, Vec::Zero(1), [](const Vec& v, const Vec&) { return Vec::Zero(v.size()).eval(); },
      cfg);
  CHECK((out - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("config validation") {
  PgdConfig bad;
  bad.rho = -0.1;
  CHECK_THROWS(bad.validate());
  bad.rho = 0.1;
  bad.steps_K = 0;
  CHECK_THROWS(bad.validate());
  bad.steps_K = 10;
  bad.alpha = 0.0;
  CHECK_THROWS(bad.validate());
  bad.alpha = -1.0;  // default 2 rho / K
  CHECK_NOTHROW(bad.validate());
  CHECK(bad.step() == doctest::Approx(0.02));
  bad.has_clamp_box = true;
  bad.clamp_lo = 1.0;
  bad.clamp_hi = 0.0;
  CHECK_THROWS(bad.validate());
}

}  // TEST_SUITE
