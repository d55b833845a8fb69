#pragma once

#include "advntk/types.hpp"

namespace advntk {

/// Second moments of a centered bivariate Gaussian (u, v):
/// s11 = E[u^2], s12 = E[uv], s22 = E[v^2].
struct BivariateMoment {
  double s11 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;

  static constexpr double kCauchySchwarzTol = 1e-12;

  /// Throws when entries are non-finite, variances negative, or the
  /// Cauchy-Schwarz bound s12^2 <= s11*s22 is violated beyond tolerance.
  void validate() const;
};

/// E[phi(u) phi(v)] for (u, v) ~ N(0, [[s11, s12], [s12, s22]]).
///
/// Closed forms: arc-cosine kernel for Relu, arcsine kernel for Erf.
/// Degenerate variances (s11*s22 = 0 with s12 = 0) evaluate the point mass
/// at zero, matching what a finite net computes at that input.
double gauss_ee(Activation act, const BivariateMoment& m);

/// E[phi'(u) phi'(v)] under the same distribution.
double gauss_dd(Activation act, const BivariateMoment& m);

struct MomentPartials {
  double d11 = 0.0;
  double d12 = 0.0;
  double d22 = 0.0;
};

/// Partial derivatives of gauss_ee / gauss_dd with respect to the moment
/// entries. For Relu at |rho| = 1 the gauss_dd partial is unbounded; it is
/// evaluated at the one-sided limit with rho^2 clamped to 1 - 1e-12.
MomentPartials gauss_ee_partials(Activation act, const BivariateMoment& m);
MomentPartials gauss_dd_partials(Activation act, const BivariateMoment& m);

}  // namespace advntk
