#include "advntk/schedule.hpp"

#include <doctest.h>

#include <cmath>

using namespace advntk;

TEST_SUITE("schedule") {

TEST_CASE("constant and sinusoid evaluation") {
  const RateFn c = RateFn::constant(0.5);
  CHECK(c(0.0) == 0.5);
  CHECK(c(123.0) == 0.5);
  CHECK(c.is_constant());
  CHECK(c.derivative_continuous());

  const RateFn s = RateFn::sinusoid(1.0, 0.5, 2.0);
  CHECK(s(0.0) == doctest::Approx(1.0));
  CHECK(s(M_PI / 4.0) == doctest::Approx(1.5));
  CHECK_FALSE(s.is_constant());
  CHECK(s.derivative_continuous());
}

TEST_CASE("piecewise linear interpolates and extends constantly") {
  const RateFn p = RateFn::piecewise_linear({0.0, 1.0, 2.0}, {0.0, 2.0, 2.0});
  CHECK(p(-1.0) == 0.0);
  CHECK(p(0.5) == doctest::Approx(1.0));
  CHECK(p(1.0) == doctest::Approx(2.0));
  CHECK(p(1.7) == doctest::Approx(2.0));
  CHECK(p(5.0) == 2.0);
  CHECK_FALSE(p.derivative_continuous());  // slope changes at the knot

  const RateFn line = RateFn::piecewise_linear({0.0, 1.0, 2.0}, {0.0, 1.0, 2.0});
  CHECK(line.derivative_continuous());
}

TEST_CASE("validation rejects malformed tables") {
  CHECK_THROWS(RateFn::piecewise_linear({0.0}, {1.0}).validate());
  CHECK_THROWS(RateFn::piecewise_linear({0.0, 0.0}, {1.0, 2.0}).validate());
  CHECK_THROWS(RateFn::piecewise_linear({0.0, 1.0}, {1.0, std::nan("")}).validate());
  CHECK_THROWS(RateFn::constant(std::nan("")).validate());
}

TEST_CASE("schedule validation") {
  RateSchedule s = RateSchedule::uniform(4, RateFn::constant(0.1), 0.1);
  CHECK_NOTHROW(s.validate());
  CHECK(s.all_constant());
  s.horizon_S = -1.0;
  CHECK_THROWS(s.validate());
  s.horizon_S = 0.0;  // degenerate no-search horizon is allowed
  CHECK_NOTHROW(s.validate());
  s.etas.clear();
  CHECK_THROWS(s.validate());
}

}  // TEST_SUITE
