#include "advntk/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace advntk {

RateFn RateFn::constant(double v) {
  RateFn f;
  f.kind = Kind::Constant;
  f.value = v;
  return f;
}

RateFn RateFn::piecewise_linear(std::vector<double> ts, std::vector<double> vs) {
  RateFn f;
  f.kind = Kind::PiecewiseLinear;
  f.knots = std::move(ts);
  f.values = std::move(vs);
  return f;
}

RateFn RateFn::sinusoid(double offset, double amplitude, double omega) {
  RateFn f;
  f.kind = Kind::Sinusoid;
  f.offset = offset;
  f.amplitude = amplitude;
  f.omega = omega;
  return f;
}

double RateFn::operator()(double t) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Sinusoid:
      return offset + amplitude * std::sin(omega * t);
    case Kind::PiecewiseLinear: {
      if (t <= knots.front()) return values.front();
      if (t >= knots.back()) return values.back();
      std::size_t hi = 1;
      while (knots[hi] < t) ++hi;
      const double w = (t - knots[hi - 1]) / (knots[hi] - knots[hi - 1]);
      return values[hi - 1] + w * (values[hi] - values[hi - 1]);
    }
  }
  return 0.0;
}

bool RateFn::is_constant() const { return kind == Kind::Constant; }

bool RateFn::derivative_continuous() const {
  if (kind != Kind::PiecewiseLinear) return true;
  if (knots.size() < 3) return true;
  const double first =
      (values[1] - values[0]) / (knots[1] - knots[0]);
  for (std::size_t i = 2; i < knots.size(); ++i) {
    const double slope = (values[i] - values[i - 1]) / (knots[i] - knots[i - 1]);
    if (std::abs(slope - first) > 1e-12 * (1.0 + std::abs(first))) return false;
  }
  return true;
}

void RateFn::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  switch (kind) {
    case Kind::Constant:
      if (!finite(value)) throw std::invalid_argument("RateFn: non-finite constant");
      return;
    case Kind::Sinusoid:
      if (!finite(offset) || !finite(amplitude) || !finite(omega))
        throw std::invalid_argument("RateFn: non-finite sinusoid parameter");
      return;
    case Kind::PiecewiseLinear:
      if (knots.size() < 2 || knots.size() != values.size())
        throw std::invalid_argument("RateFn: piecewise table needs >= 2 matching knots");
      for (std::size_t i = 0; i < knots.size(); ++i) {
        if (!finite(knots[i]) || !finite(values[i]))
          throw std::invalid_argument("RateFn: non-finite table entry");
        if (i > 0 && !(knots[i] > knots[i - 1]))
          throw std::invalid_argument("RateFn: knots must be strictly increasing");
      }
      return;
  }
}

RateSchedule RateSchedule::uniform(int m, RateFn fn, double horizon) {
  RateSchedule s;
  s.etas.assign(static_cast<std::size_t>(m), fn);
  s.horizon_S = horizon;
  return s;
}

bool RateSchedule::all_constant() const {
  for (const auto& f : etas)
    if (!f.is_constant()) return false;
  return true;
}

void RateSchedule::validate() const {
  if (!(horizon_S >= 0.0)) throw std::invalid_argument("RateSchedule: S must be >= 0");
  if (etas.empty()) throw std::invalid_argument("RateSchedule: no rate functions");
  for (const auto& f : etas) f.validate();
}

}  // namespace advntk
