#pragma once

#include <string>
#include <vector>

namespace advntk {

/// One per-sample adversarial learning-rate function eta_i(t). Three shapes:
/// constant, piecewise-linear table (constant-extended outside the knots),
/// and sinusoid a + b sin(omega t).
struct RateFn {
  enum class Kind { Constant, PiecewiseLinear, Sinusoid };

  Kind kind = Kind::Constant;
  double value = 0.0;                 // Constant
  std::vector<double> knots, values;  // PiecewiseLinear
  double offset = 0.0, amplitude = 0.0, omega = 0.0;  // Sinusoid

  static RateFn constant(double v);
  static RateFn piecewise_linear(std::vector<double> ts, std::vector<double> vs);
  static RateFn sinusoid(double offset, double amplitude, double omega);

  double operator()(double t) const;
  bool is_constant() const;
  /// True when d/dt eta is continuous: always for constant/sinusoid, and for
  /// piecewise tables only when consecutive slopes agree. Reported, not
  /// enforced; a kinked table still integrates fine under composite Simpson.
  bool derivative_continuous() const;
  void validate() const;
};

/// Per-sample rates plus the inner search horizon S. S = 0 is accepted and
/// disables the search entirely, reducing every consumer to standard
/// training.
struct RateSchedule {
  std::vector<RateFn> etas;
  double horizon_S = 0.1;

  static RateSchedule uniform(int m, RateFn fn, double horizon);
  const RateFn& eta(int i) const { return etas.at(static_cast<std::size_t>(i)); }
  int size() const { return static_cast<int>(etas.size()); }
  bool all_constant() const;
  void validate() const;
};

}  // namespace advntk
