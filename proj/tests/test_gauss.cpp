#include "advntk/gauss.hpp"

#include "advntk/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace advntk;
using namespace advntk::testutil;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Monte-Carlo estimates of E[phi(u)phi(v)] and E[phi'(u)phi'(v)] by direct
/// sampling of the bivariate Gaussian; the independent oracle for the closed
/// forms.
struct McMoments {
  McStat ee, dd;
};

McMoments mc_expectations(Activation act, const BivariateMoment& m, long draws,
                          std::uint64_t seed) {
  const double a = std::sqrt(m.s11);
  const double rho = m.s11 * m.s22 > 0.0 ? m.s12 / std::sqrt(m.s11 * m.s22) : 0.0;
  const double b1 = std::sqrt(m.s22) * rho;
  const double b2 = std::sqrt(std::max(0.0, m.s22 * (1.0 - rho * rho)));
  Philox rng(seed);
  McMoments out;
  for (long i = 0; i < draws; ++i) {
    const double z1 = rng.gaussian();
    const double z2 = rng.gaussian();
    const double u = a * z1;
    const double v = b1 * z1 + b2 * z2;
    out.ee.add(phi(act, u) * phi(act, v));
    out.dd.add(phi_prime(act, u) * phi_prime(act, v));
  }
  return out;
}

BivariateMoment random_moment(Philox& rng) {
  const double s11 = 0.1 + 3.0 * rng.uniform();
  const double s22 = 0.1 + 3.0 * rng.uniform();
  const double rho = -0.95 + 1.9 * rng.uniform();
  return {s11, rho * std::sqrt(s11 * s22), s22};
}

}  // namespace

TEST_SUITE("gauss") {

TEST_CASE("relu fully correlated unit moment") {
  const BivariateMoment m{1.0, 1.0, 1.0};
  CHECK(gauss_ee(Activation::Relu, m) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(gauss_dd(Activation::Relu, m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("relu independent unit moment") {
  const BivariateMoment m{1.0, 0.0, 1.0};
  CHECK(gauss_ee(Activation::Relu, m) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-12));
  CHECK(gauss_dd(Activation::Relu, m) == doctest::Approx(0.25).epsilon(1e-12));
  // Cross-check the frozen value against the sampling oracle.
  const McMoments mc = mc_expectations(Activation::Relu, m, 2'000'000, 77);
  CHECK(std::abs(mc.ee.mean() - 1.0 / (2.0 * kPi)) < 4.0 * mc.ee.stderror());
}

TEST_CASE("erf independent zero-mean moment vanishes") {
  const BivariateMoment m{1.0, 0.0, 1.0};
  CHECK(gauss_ee(Activation::Erf, m) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("degenerate variances") {
  CHECK_THROWS(gauss_ee(Activation::Relu, {0.0, 0.5, 1.0}));
  CHECK(gauss_ee(Activation::Relu, {0.0, 0.0, 1.0}) == 0.0);
  CHECK(gauss_dd(Activation::Relu, {0.0, 0.0, 1.0}) == 0.0);
  CHECK(gauss_ee(Activation::Erf, {0.0, 0.0, 1.0}) == 0.0);
  // Erf derivative at a point mass: phi'(0) * E[phi'(v)].
  const double want = 4.0 / kPi / std::sqrt(1.0 + 2.0 * 1.0);
  CHECK(gauss_dd(Activation::Erf, {0.0, 0.0, 1.0}) == doctest::Approx(want));
}

TEST_CASE("cauchy-schwarz guard") {
  CHECK_THROWS(gauss_ee(Activation::Erf, {1.0, 1.1, 1.0}));
  // One-ulp violations inside the tolerance clamp instead of throwing.
  CHECK_NOTHROW(gauss_ee(Activation::Erf, {1.0, 1.0 + 1e-13, 1.0}));
  CHECK_NOTHROW(gauss_dd(Activation::Relu, {1.0, 1.0 + 1e-13, 1.0}));
}

TEST_CASE("closed forms match monte carlo within 4 standard errors") {
  // 10^7 draws per moment keeps the standard error near 2e-4.
  const long draws = 10'000'000;
  for (Activation act : {Activation::Erf, Activation::Relu}) {
    Philox rng(act == Activation::Erf ? 11 : 12);
    for (int trial = 0; trial < 20; ++trial) {
      const BivariateMoment m = random_moment(rng);
      const McMoments mc =
          mc_expectations(act, m, draws, 1000 + 17 * trial + (act == Activation::Erf));
      const double ee = gauss_ee(act, m);
      const double dd = gauss_dd(act, m);
      INFO("act=", static_cast<int>(act), " s11=", m.s11, " s12=", m.s12,
           " s22=", m.s22);
      CHECK(std::abs(ee - mc.ee.mean()) < 4.0 * mc.ee.stderror());
      CHECK(std::abs(dd - mc.dd.mean()) < 4.0 * mc.dd.stderror());
    }
  }
}

TEST_CASE("moment partials match finite differences") {
  Philox rng(21);
  for (Activation act : {Activation::Erf, Activation::Relu}) {
    for (int trial = 0; trial < 10; ++trial) {
      const BivariateMoment m = random_moment(rng);
      const double h = 1e-6;
      auto check_partials = [&](auto fn, const MomentPartials& got) {
        const double d11 =
            (fn(act, BivariateMoment{m.s11 + h, m.s12, m.s22}) -
             fn(act, BivariateMoment{m.s11 - h, m.s12, m.s22})) /
            (2 * h);
        const double d12 =
            (fn(act, BivariateMoment{m.s11, m.s12 + h, m.s22}) -
             fn(act, BivariateMoment{m.s11, m.s12 - h, m.s22})) /
            (2 * h);
        const double d22 =
            (fn(act, BivariateMoment{m.s11, m.s12, m.s22 + h}) -
             fn(act, BivariateMoment{m.s11, m.s12, m.s22 - h})) /
            (2 * h);
        CHECK(rel_err(got.d11, d11) < 1e-4);
        CHECK(rel_err(got.d12, d12) < 1e-4);
        CHECK(rel_err(got.d22, d22) < 1e-4);
      };
      check_partials([](Activation a, const BivariateMoment& mm) { return gauss_ee(a, mm); },
                     gauss_ee_partials(act, m));
      check_partials([](Activation a, const BivariateMoment& mm) { return gauss_dd(a, mm); },
                     gauss_dd_partials(act, m));
    }
  }
}

}  // TEST_SUITE
