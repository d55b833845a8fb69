#include "advntk/gradflow.hpp"

#include <cmath>
#include <stdexcept>

namespace advntk {

GradFlowResult gradflow_at_simulate(const MlpParams& p0, const Mat& xs, const Vec& y,
                                    const RateSchedule& sched, const Mat& probe_xs,
                                    const GradFlowConfig& cfg) {
  sched.validate();
  if (cfg.dt <= 0.0 || cfg.ds <= 0.0 || cfg.T <= 0.0)
    throw std::invalid_argument("gradflow: T, dt, ds must be positive");
  const int m = static_cast<int>(xs.rows());
  const int c = p0.spec.output_dim;
  if (sched.size() != m) throw std::invalid_argument("gradflow: schedule size mismatch");
  if (y.size() != static_cast<Eigen::Index>(m) * c)
    throw std::invalid_argument("gradflow: target length mismatch");

  const int outer_steps = std::max(1, static_cast<int>(std::llround(cfg.T / cfg.dt)));
  const int inner_steps =
      std::max(1, static_cast<int>(std::llround(sched.horizon_S / cfg.ds)));
  const double dt = cfg.T / outer_steps;
  const double ds = sched.horizon_S / inner_steps;

  MlpParams p = p0;
  const Mat x_clean = xs.transpose();        // d x M, column-major samples
  const Mat probe_cols = probe_xs.transpose();
  Mat y_cols(c, m);
  for (int i = 0; i < m; ++i)
    y_cols.col(i) = y.segment(static_cast<Eigen::Index>(i) * c, c);

  GradFlowResult res;
  auto record = [&](double t) {
    const Mat f_tr = mlp_forward_batch(p, xs);  // M x c
    Vec flat(static_cast<Eigen::Index>(m) * c);
    for (int i = 0; i < m; ++i) flat.segment(static_cast<Eigen::Index>(i) * c, c) = f_tr.row(i);
    res.times.push_back(t);
    res.f_train.push_back(flat);
    const Mat f_pr = mlp_forward_batch(p, probe_xs);
    Vec flat_p(f_pr.size());
    for (int i = 0; i < f_pr.rows(); ++i)
      flat_p.segment(static_cast<Eigen::Index>(i) * c, c) = f_pr.row(i);
    res.f_probe.push_back(flat_p);
  };
  record(0.0);

  Vec eta_now(m);
  for (int k = 0; k < outer_steps; ++k) {
    const double t = k * dt;
    for (int i = 0; i < m; ++i) eta_now(i) = sched.eta(i)(t);

    // Inner ascent flow, all samples advanced together:
    // dx_i/ds = eta_i(t) J_x(x_i)^T (f(x_i) - y_i).
    Mat x_adv = x_clean;
    for (int s = 0; s < inner_steps; ++s) {
      const Mat f = mlp_forward_batch(p, x_adv.transpose()).transpose();  // c x M
      const Mat vjp = input_vjp_batch(p, x_adv, f - y_cols);              // d x M
      for (int i = 0; i < m; ++i) x_adv.col(i) += ds * eta_now(i) * vjp.col(i);
    }

    // One Euler step of the parameter flow on the searched points.
    const Mat f_adv = mlp_forward_batch(p, x_adv.transpose()).transpose();
    const Mat residual = f_adv - y_cols;
    res.max_loss_grad_norm = std::max(res.max_loss_grad_norm, residual.norm());
    const ParamGrad g = param_vjp_batch(p, x_adv, residual);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      p.weights[l] -= dt * g.weights[l];
      p.biases[l] -= dt * g.biases[l];
    }

    if (!residual.allFinite() || f_adv.cwiseAbs().maxCoeff() > cfg.divergence_limit)
      throw std::runtime_error("gradflow: diverged at t = " + std::to_string(t + dt) +
                               " (|f| > " + std::to_string(cfg.divergence_limit) + ")");
    if (cfg.record_every > 0 && (k + 1) % cfg.record_every == 0 && k + 1 < outer_steps)
      record((k + 1) * dt);
  }
  record(cfg.T);
  res.final_params = std::move(p);
  return res;
}

}  // namespace advntk
