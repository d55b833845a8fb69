#pragma once

#include "advntk/common.hpp"
#include "advntk/mlp.hpp"
#include "advntk/schedule.hpp"

#include <vector>

namespace advntk {

struct GradFlowConfig {
  double T = 1.0;
  double dt = 1e-3;    // outer Euler step
  double ds = 1e-3;    // inner adversarial flow step
  int record_every = 0;  // outer steps between records; 0 records ends only
  double divergence_limit = 1e6;
};

struct GradFlowResult {
  std::vector<double> times;
  std::vector<Vec> f_train;  // outputs on the clean training inputs, Mc
  std::vector<Vec> f_probe;  // outputs on probe points, (#probe * c)
  double max_loss_grad_norm = 0.0;  // sup_t |f(X_adv) - y|_2, reported only
  MlpParams final_params;
};

/// Continuous-time adversarial training of a finite net under squared loss,
/// discretized with explicit Euler in both flows. Each outer step first runs
/// the per-sample adversarial ascent flow from the clean inputs for time S
/// (step ds), then takes one Euler step of the parameter flow on the found
/// points. eta identically zero (or S = 0) reduces to standard gradient
/// flow training. Aborts with a diagnostic if outputs exceed
/// divergence_limit.
GradFlowResult gradflow_at_simulate(const MlpParams& p0, const Mat& xs, const Vec& y,
                                    const RateSchedule& sched, const Mat& probe_xs,
                                    const GradFlowConfig& cfg);

}  // namespace advntk
