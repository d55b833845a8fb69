#include "advntk/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace advntk;

TEST_SUITE("rng") {

TEST_CASE("identical seeds produce identical streams") {
  Philox a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("streams with different keys or counters differ") {
  Philox a(42, 0), b(43, 0), c(42, 1);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    same_ab += va == b.next_u64();
    same_ac += va == c.next_u64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("uniform lies in [0,1) and has sane mean") {
  Philox rng(1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("gaussian moments") {
  Philox rng(2);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("next_below stays in range and covers values") {
  Philox rng(3);
  bool seen[7] = {};
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.next_below(7);
    REQUIRE(v < 7);
    seen[v] = true;
  }
  for (bool s : seen) CHECK(s);
}

}  // TEST_SUITE
