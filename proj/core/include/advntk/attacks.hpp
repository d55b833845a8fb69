#pragma once

#include "advntk/common.hpp"
#include "advntk/rng.hpp"

#include <functional>

namespace advntk {

/// l-infinity PGD configuration. alpha < 0 means the default 2*rho/K.
struct PgdConfig {
  double rho = 0.0;
  int steps_K = 10;
  double alpha = -1.0;
  bool has_clamp_box = false;
  double clamp_lo = 0.0;
  double clamp_hi = 1.0;
  bool random_start = false;  // off by default; kept for experiments

  double step() const { return alpha >= 0.0 ? alpha : 2.0 * rho / steps_K; }
  void validate() const;
};

/// grad_fn(x, y) must return the gradient of the attacked loss at x.
using LossGradFn = std::function<Vec(const Vec&, const Vec&)>;

/// K iterations of signed gradient ascent with projection onto the
/// l-infinity ball of radius rho around x (intersected with the clamp box
/// when set). The returned point satisfies max_j |x'_j - x_j| <= rho exactly
/// as evaluated in double arithmetic; sign(0) = 0, so zero gradients leave
/// the iterate in place. rho = 0 returns x unchanged.
Vec pgd_linf(const Vec& x, const Vec& y, const LossGradFn& grad_fn,
             const PgdConfig& cfg, Philox* rng = nullptr);

}  // namespace advntk
