#include "advntk/attacks.hpp"

#include <cmath>
#include <stdexcept>

namespace advntk {
namespace {

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void PgdConfig::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw std::invalid_argument("PgdConfig: rho must be >= 0");
  if (steps_K < 1) throw std::invalid_argument("PgdConfig: steps_K must be >= 1");
  if (rho > 0.0 && !(step() > 0.0))
    throw std::invalid_argument("PgdConfig: alpha must be > 0 when rho > 0");
  if (has_clamp_box && !(clamp_lo < clamp_hi))
    throw std::invalid_argument("PgdConfig: empty clamp box");
}

Vec pgd_linf(const Vec& x, const Vec& y, const LossGradFn& grad_fn,
             const PgdConfig& cfg, Philox* rng) {
  cfg.validate();
  if (cfg.rho == 0.0) return x;

  const int d = static_cast<int>(x.size());
  const double alpha = cfg.step();

  // Per-coordinate feasible interval: ball around x intersected with the box.
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    lo(j) = x(j) - cfg.rho;
    hi(j) = x(j) + cfg.rho;
    if (cfg.has_clamp_box) {
      lo(j) = std::max(lo(j), cfg.clamp_lo);
      hi(j) = std::min(hi(j), cfg.clamp_hi);
      if (lo(j) > hi(j)) lo(j) = hi(j) = std::clamp(x(j), cfg.clamp_lo, cfg.clamp_hi);
    }
  }

  Vec cur = x;
  if (cfg.random_start && rng) {
    for (int j = 0; j < d; ++j)
      cur(j) = std::clamp(x(j) + rng->uniform(-cfg.rho, cfg.rho), lo(j), hi(j));
  }

  for (int k = 0; k < cfg.steps_K; ++k) {
    const Vec g = grad_fn(cur, y);
    for (int j = 0; j < d; ++j)
      cur(j) = std::clamp(cur(j) + alpha * sign0(g(j)), lo(j), hi(j));
  }

  // The interval endpoints are rounded, so |cur - x| can exceed rho by one
  // ulp; nudge offending coordinates toward x until the measured distance
  // is inside the ball.
  for (int j = 0; j < d; ++j) {
    int guard = 0;
    while (std::abs(cur(j) - x(j)) > cfg.rho && guard++ < 8)
      cur(j) = std::nextafter(cur(j), x(j));
  }
  return cur;
}

}  // namespace advntk
