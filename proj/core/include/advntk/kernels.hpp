#pragma once

#include "advntk/common.hpp"
#include "advntk/gauss.hpp"
#include "advntk/types.hpp"

namespace advntk {

/// Scalar-backed kernel Gram over M inputs with c output channels. The full
/// (Mc x Mc) operator is scalars (kron) I_c and is only materialized on
/// request. Sample-major block order: flat index (i, k) -> i*c + k.
struct KernelGram {
  int m = 0;
  int c = 1;
  Mat scalars;  // M x M, symmetric

  Mat materialize() const;

  /// Largest |eigenvalue| tolerance check: symmetric and eigenvalues
  /// >= -1e-8 * lambda_max. Used by tests and state constructors.
  bool is_psd(double rel_tol = 1e-8) const;
};

/// NNGP covariance Sigma^(l)(x, x') of layer-l preactivations, l in
/// [1, depth_L + 1]. Layer 1 is sigma_w^2 x.x'/d + sigma_b^2; deeper layers
/// apply the Gaussian expectation of the activation.
double nngp_sigma(const NetSpec& spec, int layer, const Vec& x, const Vec& x2);

/// Infinite-width NTK Theta^inf_theta(x, x') at the output layer. The base
/// layer is x.x'/d + 1; note it deliberately carries no sigma_w/sigma_b
/// factors while Sigma^(1) does, mirroring the defining recursions.
double ntk_theta(const NetSpec& spec, const Vec& x, const Vec& x2);

/// Infinite-width ARK Theta^inf_x(x, x') at the output layer: base sigma_w^2,
/// then multiplied by sigma_w^2 E[phi' phi'] per hidden layer.
double ark_theta_x(const NetSpec& spec, const Vec& x, const Vec& x2);

/// NTK Gram over the rows of xs (M x d). One recursion pass over all pairs,
/// sharing the diagonal Sigma chain; pairs are evaluated in parallel with
/// per-entry writes, so results do not depend on thread count.
KernelGram ntk_gram(const NetSpec& spec, const Mat& xs);

/// ARK diagonal Theta^inf_x(x_i, x_i) for each row of xs.
Vec ark_diag(const NetSpec& spec, const Mat& xs);

/// Row vector Theta^inf_theta(x, x_i) against every row of xs.
Vec ntk_cross_row(const NetSpec& spec, const Vec& x, const Mat& xs);

/// Gradient of Theta^inf_theta(x, x2) with respect to x, computed by
/// forward-propagating the partials of the base moments through the layer
/// recursion with the closed-form gauss_* derivatives.
Vec ntk_grad_x(const NetSpec& spec, const Vec& x, const Vec& x2);

/// Gradient of sum_i beta_i * Theta^inf_theta(x, x_i) with respect to x.
/// Same math as ntk_grad_x, vectorized over the rows of xs; this is what
/// PGD against kernel models consumes.
Vec ntk_weighted_grad_x(const NetSpec& spec, const Vec& x, const Mat& xs,
                        const Vec& beta);

}  // namespace advntk
