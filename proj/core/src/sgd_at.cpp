#include "advntk/sgd_at.hpp"

#include "advntk/rng.hpp"

#include <memory>
#include <stdexcept>

namespace advntk {

RobustModel mlp_robust_model(const MlpParams& p) {
  RobustModel model;
  // Copy the parameters into the closures; evaluation stays valid after the
  // training loop moves on.
  auto params = std::make_shared<MlpParams>(p);
  model.predict = [params](const Vec& x) { return mlp_forward(*params, x); };
  model.loss_grad_x = [params](const Vec& x, const Vec& y) {
    const Vec f = mlp_forward(*params, x);
    return input_vjp_batch(*params, x, f - y).col(0).eval();
  };
  return model;
}

SgdAtResult sgd_at_train(const MlpParams& p0, const Dataset& train,
                         const Dataset& probe, const SgdAtConfig& cfg) {
  train.validate();
  probe.validate();
  cfg.pgd.validate();
  if (cfg.batch < 1 || cfg.batch > train.m)
    throw std::invalid_argument("sgd_at_train: batch must be in [1, M]");

  MlpParams p = p0;
  const int c = p.spec.output_dim;
  std::vector<Mat> vel_w(p.weights.size());
  std::vector<Vec> vel_b(p.biases.size());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    vel_w[l] = Mat::Zero(p.weights[l].rows(), p.weights[l].cols());
    vel_b[l] = Vec::Zero(p.biases[l].size());
  }

  Philox batch_rng(cfg.seed, /*stream=*/0xba7c);
  SgdAtResult res;

  auto log_metrics = [&](int iter, double loss) {
    const AccuracyPair acc = eval_robust_accuracy(mlp_robust_model(p), probe, cfg.pgd);
    res.log.push_back({iter, acc.clean_acc, acc.robust_acc, loss});
  };

  for (int iter = 0; iter < cfg.iters; ++iter) {
    std::vector<int> batch(cfg.batch);
    for (int b = 0; b < cfg.batch; ++b)
      batch[b] = static_cast<int>(batch_rng.next_below(train.m));

    // Attack the batch against the current parameters.
    Mat x_adv_cols(train.d, cfg.batch);
    Mat y_cols(c, cfg.batch);
    const RobustModel attacked = mlp_robust_model(p);
    std::vector<Vec> adv(cfg.batch);
    parallel_for(cfg.batch, [&](int b) {
      const Vec x = train.xs.row(batch[b]).transpose();
      const Vec y = train.target(batch[b]);
      adv[b] = cfg.pgd.rho > 0.0 ? pgd_linf(x, y, attacked.loss_grad_x, cfg.pgd) : x;
    });
    for (int b = 0; b < cfg.batch; ++b) {
      x_adv_cols.col(b) = adv[b];
      y_cols.col(b) = train.target(batch[b]);
    }

    // Batch-mean squared loss step.
    const Mat f = mlp_forward_batch(p, x_adv_cols.transpose()).transpose();
    const Mat residual = f - y_cols;
    const double loss = 0.5 * residual.squaredNorm() / cfg.batch;
    ParamGrad g = param_vjp_batch(p, x_adv_cols, residual);
    const double inv_b = 1.0 / cfg.batch;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
      vel_w[l] = cfg.momentum * vel_w[l] + inv_b * g.weights[l] +
                 cfg.weight_decay * p.weights[l];
      vel_b[l] = cfg.momentum * vel_b[l] + inv_b * g.biases[l] +
                 cfg.weight_decay * p.biases[l];
      p.weights[l] -= cfg.lr * vel_w[l];
      p.biases[l] -= cfg.lr * vel_b[l];
    }
    if (!residual.allFinite())
      throw std::runtime_error("sgd_at_train: loss diverged at iteration " +
                               std::to_string(iter));

    if (cfg.eval_every > 0 && (iter + 1) % cfg.eval_every == 0)
      log_metrics(iter + 1, loss);
  }
  res.params = std::move(p);
  return res;
}

}  // namespace advntk
