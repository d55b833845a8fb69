#include "advntk/kernels.hpp"

#include "advntk/mlp.hpp"
#include "advntk/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace advntk;
using namespace advntk::testutil;

namespace {

NetSpec erf_spec(int depth, int d) {
  NetSpec s;
  s.depth_L = depth;
  s.input_dim = d;
  s.output_dim = 1;
  s.activation = Activation::Erf;
  s.sigma_w = 1.76;
  s.sigma_b = 0.18;
  return s;
}

/// GP-sampling oracle for one NNGP recursion step: draws (u, v) from the
/// layer-l covariance and averages sigma_w^2 phi(u) phi(v) + sigma_b^2.
double mc_next_sigma(const NetSpec& spec, double s11, double s12, double s22,
                     long draws, std::uint64_t seed, double* stderr_out) {
  Philox rng(seed);
  const double a = std::sqrt(s11);
  const double rho = s12 / std::sqrt(s11 * s22);
  const double b1 = std::sqrt(s22) * rho;
  const double b2 = std::sqrt(std::max(0.0, s22 * (1.0 - rho * rho)));
  McStat stat;
  const double sw2 = spec.sigma_w * spec.sigma_w;
  for (long i = 0; i < draws; ++i) {
    const double z1 = rng.gaussian();
    const double z2 = rng.gaussian();
    stat.add(sw2 * phi(spec.activation, a * z1) *
             phi(spec.activation, b1 * z1 + b2 * z2));
  }
  *stderr_out = sw2 * stat.stderror();  // scale folded into samples already
  return stat.mean() + spec.sigma_b * spec.sigma_b;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("nngp base layer") {
  const NetSpec spec = erf_spec(2, 4);
  const Vec zero = Vec::Zero(4);
  CHECK(nngp_sigma(spec, 1, zero, zero) ==
        doctest::Approx(spec.sigma_b * spec.sigma_b).epsilon(1e-14));

  NetSpec unit = spec;
  unit.sigma_w = 1.0;
  unit.sigma_b = 0.0;
  const Vec ones = Vec::Ones(4);
  CHECK(nngp_sigma(unit, 1, ones, ones) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("nngp deeper layers match the GP sampling oracle") {
  const NetSpec spec = erf_spec(2, 16);
  Philox rng(5);
  const Vec x = random_unit(rng, 16);
  const Vec x2 = random_unit(rng, 16);

  for (int layer = 2; layer <= 3; ++layer) {
    const double s11 = nngp_sigma(spec, layer - 1, x, x);
    const double s12 = nngp_sigma(spec, layer - 1, x, x2);
    const double s22 = nngp_sigma(spec, layer - 1, x2, x2);
    double se = 0.0;
    const double mc = mc_next_sigma(spec, s11, s12, s22, 1'000'000, 100 + layer, &se);
    const double got = nngp_sigma(spec, layer, x, x2);
    INFO("layer ", layer, ": closed ", got, " vs mc ", mc, " +- ", se);
    CHECK(std::abs(got - mc) < 3.0 * se);
  }
}

TEST_CASE("nngp rejects bad input") {
  const NetSpec spec = erf_spec(2, 4);
  Vec bad = Vec::Zero(4);
  bad(0) = std::nan("");
  CHECK_THROWS(nngp_sigma(spec, 1, bad, bad));
  CHECK_THROWS(nngp_sigma(spec, 0, Vec::Zero(4), Vec::Zero(4)));
  CHECK_THROWS(nngp_sigma(spec, 4, Vec::Zero(4), Vec::Zero(4)));  // > L+1
}

TEST_CASE("ntk base case and symmetry") {
  NetSpec depth0 = erf_spec(1, 4);
  depth0.depth_L = 0;  // single affine layer, kernel recursions only
  CHECK(ntk_theta(depth0, Vec::Zero(4), Vec::Zero(4)) == doctest::Approx(1.0));

  const NetSpec spec = erf_spec(3, 8);
  Philox rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = random_vec(rng, 8);
    const Vec y = random_vec(rng, 8);
    CHECK(ntk_theta(spec, x, y) == ntk_theta(spec, y, x));
  }
}

TEST_CASE("ntk diagonal lower bound") {
  // Each recursion step adds E[phi phi] + 1 >= 1 on a nonnegative term.
  Philox rng(7);
  for (int depth : {1, 2, 4}) {
    const NetSpec spec = erf_spec(depth, 6);
    const Vec x = random_vec(rng, 6);
    CHECK(ntk_theta(spec, x, x) >= depth + 1);
  }
}

TEST_CASE("ark base and one-layer relu value") {
  NetSpec spec = erf_spec(1, 4);
  spec.depth_L = 0;
  const Vec x = Vec::Ones(4);
  CHECK(ark_theta_x(spec, x, x) ==
        doctest::Approx(spec.sigma_w * spec.sigma_w).epsilon(1e-14));

  NetSpec relu = erf_spec(1, 4);
  relu.activation = Activation::Relu;
  // One hidden relu layer at x = x2: E[phi' phi'] = 1/2.
  const double want = std::pow(relu.sigma_w, 4) / 2.0;
  CHECK(ark_theta_x(relu, x, x) == doctest::Approx(want).epsilon(1e-12));

  Philox rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = random_vec(rng, 4);
    CHECK(ark_theta_x(relu, v, v) > 0.0);
    CHECK(ark_theta_x(erf_spec(3, 4), v, v) > 0.0);
  }
}

TEST_CASE("gram consistency with pairwise calls") {
  const NetSpec spec = erf_spec(2, 5);
  Philox rng(9);
  const Mat xs = random_mat(rng, 6, 5);
  const KernelGram gram = ntk_gram(spec, xs);
  CHECK(gram.m == 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(gram.scalars(i, j) ==
            ntk_theta(spec, xs.row(i).transpose(), xs.row(j).transpose()));

  const Vec ad = ark_diag(spec, xs);
  for (int i = 0; i < 6; ++i)
    CHECK(ad(i) == ark_theta_x(spec, xs.row(i).transpose(), xs.row(i).transpose()));
}

TEST_CASE("gram of one point and psd on sixteen points") {
  const NetSpec spec = erf_spec(2, 5);
  Philox rng(10);
  const Mat one = random_mat(rng, 1, 5);
  const KernelGram g1 = ntk_gram(spec, one);
  CHECK(g1.scalars(0, 0) ==
        doctest::Approx(ntk_theta(spec, one.row(0).transpose(), one.row(0).transpose())));

  const Mat xs = random_mat(rng, 16, 5);
  const KernelGram gram = ntk_gram(spec, xs);
  CHECK(gram.is_psd());

  NetSpec relu = spec;
  relu.activation = Activation::Relu;
  CHECK(ntk_gram(relu, xs).is_psd());
}

TEST_CASE("kernel gram materializes as kron with identity") {
  NetSpec spec = erf_spec(1, 3);
  spec.output_dim = 2;
  Philox rng(11);
  const Mat xs = random_mat(rng, 3, 3);
  const KernelGram gram = ntk_gram(spec, xs);
  const Mat full = gram.materialize();
  REQUIRE(full.rows() == 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 2; ++k)
        for (int k2 = 0; k2 < 2; ++k2)
          CHECK(full(2 * i + k, 2 * j + k2) ==
                (k == k2 ? gram.scalars(i, j) : 0.0));
}

TEST_CASE("ntk gradient matches finite differences on erf instances") {
  Philox rng(12);
  int trials = 0;
  for (int depth : {1, 2, 3}) {
    const NetSpec spec = erf_spec(depth, 8);
    for (int t = 0; t < 17; ++t) {
      const Vec x = random_vec(rng, 8);
      const Vec x2 = random_vec(rng, 8);
      const Vec grad = ntk_grad_x(spec, x, x2);
      const Vec fd = fd_gradient(
          [&](const Vec& v) { return ntk_theta(spec, v, x2); }, x, 1e-5);
      INFO("depth ", depth, " trial ", t);
      CHECK(rel_err(grad, fd) < 1e-5);
      ++trials;
    }
  }
  CHECK(trials >= 50);
}

TEST_CASE("ntk gradient base case is x2/d") {
  NetSpec spec = erf_spec(1, 4);
  spec.depth_L = 0;  // Theta = x.x2/d + 1 exactly
  Philox rng(13);
  const Vec x = random_vec(rng, 4);
  const Vec x2 = random_vec(rng, 4);
  const Vec grad = ntk_grad_x(spec, x, x2);
  CHECK((grad - x2 / 4.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("diagonal gradient equals twice the partial by symmetry") {
  const NetSpec spec = erf_spec(2, 6);
  Philox rng(14);
  const Vec x = random_vec(rng, 6);
  const Vec fd = fd_gradient(
      [&](const Vec& v) { return ntk_theta(spec, v, v); }, x, 1e-5);
  const Vec partial = ntk_grad_x(spec, x, x);
  CHECK(rel_err(2.0 * partial, fd) < 1e-5);
}

TEST_CASE("weighted gradient equals the sum of pair gradients") {
  const NetSpec spec = erf_spec(2, 5);
  Philox rng(15);
  const Mat xs = random_mat(rng, 7, 5);
  const Vec x = random_vec(rng, 5);
  const Vec beta = random_vec(rng, 7);
  Vec want = Vec::Zero(5);
  for (int i = 0; i < 7; ++i)
    want += beta(i) * ntk_grad_x(spec, x, xs.row(i).transpose());
  const Vec got = ntk_weighted_grad_x(spec, x, xs, beta);
  CHECK(rel_err(got, want) < 1e-12);
}

TEST_CASE("relu gradient near parallel inputs stays finite") {
  NetSpec relu = erf_spec(2, 4);
  relu.activation = Activation::Relu;
  const Vec x = Vec::Ones(4);
  const Vec x2 = 2.0 * Vec::Ones(4);  // exactly parallel, rho = 1
  const Vec g = ntk_grad_x(relu, x, x2);
  CHECK(g.allFinite());
}

TEST_CASE("empirical kernels approach the analytic limit with width") {
  // Reduced-size version of the width sweep; the acceptance suite runs the
  // full setting.
  NetSpec spec = erf_spec(2, 8);
  Philox rng(16);
  const Mat xs = random_mat(rng, 8, 8);
  const KernelGram analytic = ntk_gram(spec, xs);
  const Mat analytic_full = analytic.materialize();

  double prev = 1e9;
  for (int width : {64, 512}) {
    NetSpec wspec = spec;
    wspec.hidden_width = width;
    double err = 0.0;
    const int seeds = 3;
    for (int s = 0; s < seeds; ++s) {
      const MlpParams p = mlp_init(wspec, 900 + s);
      err += (empirical_ntk(p, xs) - analytic_full).norm() / analytic_full.norm();
    }
    err /= seeds;
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.2);
}

}  // TEST_SUITE
