#pragma once

#include "advntk/attacks.hpp"
#include "advntk/common.hpp"
#include "advntk/dataset.hpp"
#include "advntk/kernels.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <string>
#include <vector>

namespace advntk {

/// Disjoint split of a training set into the kernel-construction subset and
/// the adversarial validation subset (|indices_val| = m_val).
struct SplitPlan {
  int m_val = 0;
  std::uint64_t seed = 0;
  std::vector<int> indices_opt, indices_val;

  static SplitPlan make(int m_total, int m_val, std::uint64_t seed);
  void validate(int m_total) const;
};

/// Infinite-width model with trainable per-coordinate regularization varpi:
/// f(x) = Theta(x, X) Theta(X, X)^-1 (I - exp(-Theta(X, X) Diag(varpi))) y.
///
/// Because the analytic Gram is scalar (x) I_c while Diag(varpi) is a free
/// diagonal, the exponential splits into c independent M x M factors, one
/// per output channel; everything below works channel by channel. varpi is
/// stored sample-major ((i, k) -> i*c + k) and starts at zero, where the
/// model is identically zero. Construction fails on a non-PD Gram.
struct AdvNtkModel {
  NetSpec spec;
  Mat xs_opt;   // M_opt x d
  Vec ys_opt;   // M_opt * c
  int m_opt = 0;
  int c = 1;
  KernelGram gram;          // scalar Gram over xs_opt
  Eigen::LLT<Mat> gram_llt; // cached factorization
  Vec varpi;                // M_opt * c, trainable

  // Cache for the current varpi: per-channel E_k = exp(-S diag(varpi_k))
  // and the prediction coefficients V = S^-1 (I - E_k) y_k, reused across a
  // batch and across PGD iterations within one step.
  std::vector<Mat> exp_cache;  // c matrices M x M
  Mat coeff;                   // M_opt x c

  /// Recomputes the caches after varpi changes.
  void refresh();

  Vec channel_varpi(int k) const;
  Vec channel_y(int k) const;
};

AdvNtkModel advntk_make(const NetSpec& spec, const Mat& xs_opt, const Vec& ys_opt);

/// Model output at x, using the cached coefficients.
Vec advntk_eval(const AdvNtkModel& model, const Vec& x);

/// Exact gradient of the batch squared loss 0.5 sum_b |f(x_b) - y_b|^2 with
/// respect to varpi, routed through one Frechet-adjoint evaluation of the
/// matrix exponential per channel.
Vec advntk_grad_varpi(const AdvNtkModel& model, const Mat& batch_x, const Vec& batch_y);

/// Gradient of 0.5 |f(x) - y|^2 with respect to the input x.
Vec advntk_grad_x(const AdvNtkModel& model, const Vec& x, const Vec& y);

struct AdvNtkTrainConfig {
  NetSpec net;  // input/output dims are overwritten from the dataset
  PgdConfig pgd;
  int iters = 50;
  double lr = 0.1;  // zeta
  int batch = 128;
  std::uint64_t seed = 0;
};

struct AdvNtkTrainResult {
  AdvNtkModel model;
  std::vector<std::pair<int, double>> robust_val_loss;  // (iteration, batch loss)
  int skipped_zero_grad_steps = 0;
};

/// Algorithm: split the data, start from varpi = 0, and per iteration attack
/// a validation minibatch with PGD against the current model, then take one
/// l2-normalized SGD step of length lr on varpi. Zero-gradient steps are
/// skipped. Deterministic in (data, plan, cfg).
AdvNtkTrainResult advntk_train(const Dataset& data, const SplitPlan& plan,
                               const AdvNtkTrainConfig& cfg);

/// Plain NTK kernel regression f(x) = Theta(x, X) Theta(X, X)^-1 y — the
/// varpi -> infinity limit of the model above, used as the untrained
/// baseline.
struct KernelRegressor {
  NetSpec spec;
  Mat xs;
  Mat coeff;  // M x c
};

KernelRegressor make_ntk_regressor(const NetSpec& spec, const Mat& xs, const Vec& ys);

/// Prediction / attack-gradient closures shared by both kernel models.
RobustModel advntk_robust_model(const AdvNtkModel& model);
RobustModel regressor_robust_model(const KernelRegressor& reg);

/// JSON record with spec, opt set, varpi, and an FNV-1a checksum of the Gram
/// bytes; load recomputes the Gram and verifies the checksum.
void save_advntk_model(const AdvNtkModel& model, const std::string& path);
AdvNtkModel load_advntk_model(const std::string& path);

}  // namespace advntk
