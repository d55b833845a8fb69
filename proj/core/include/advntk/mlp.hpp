#pragma once

#include "advntk/common.hpp"
#include "advntk/types.hpp"

#include <cstdint>
#include <vector>

namespace advntk {

/// Finite-width MLP in NTK parameterization: layer l computes
/// h^(l) = W^(l) x^(l-1) / sqrt(n_{l-1}) + b^(l). Weights initialize as
/// N(0, sigma_w^2), biases as N(0, sigma_b^2), from the Philox generator.
struct MlpParams {
  NetSpec spec;
  std::vector<Mat> weights;  // depth_L + 1 matrices, n_l x n_{l-1}
  std::vector<Vec> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int num_params() const;
};

/// Deterministic in (spec, seed); independent of platform and thread count.
MlpParams mlp_init(const NetSpec& spec, std::uint64_t seed);

struct ForwardTrace {
  std::vector<Vec> preacts;   // h^(1..L+1)
  std::vector<Vec> postacts;  // postacts[0] = input, then phi(h^(l)) for l <= L
};

/// Output f(x) = h^(L+1)(x); optionally records the full trace.
Vec mlp_forward(const MlpParams& p, const Vec& x, ForwardTrace* trace = nullptr);

/// Batched forward over the rows of xs (M x d); returns M x c outputs.
Mat mlp_forward_batch(const MlpParams& p, const Mat& xs);

/// Exact reverse-mode Jacobian of f with respect to the flattened parameters
/// (c x P). Parameter order: per layer, column-major vec(W^(l)) then b^(l).
/// Intended for small nets; the empirical kernels below never materialize it.
Mat param_jacobian(const MlpParams& p, const Vec& x);

/// Jacobian of f with respect to the input (c x d).
Mat input_jacobian(const MlpParams& p, const Vec& x);

/// Empirical NTK over the rows of xs: (Mc x Mc), sample-major blocks,
/// entry ((i,k),(j,k')) = d f_k(x_i)/d theta . d f_k'(x_j)/d theta.
/// Assembled from layerwise factored products, so width-4096 nets stay cheap.
Mat empirical_ntk(const MlpParams& p, const Mat& xs);

/// Empirical ARK diagonal: per-sample c x c blocks J_x(x_i) J_x(x_i)^T.
std::vector<Mat> empirical_ark_diag(const MlpParams& p, const Mat& xs);

/// Batched input-VJP: given per-sample output cotangents R (c x M) at the
/// points X (d x M, column-major samples), returns d x M with column i equal
/// to J_x(x_i)^T R.col(i). Shared by the adversarial flows and PGD.
Mat input_vjp_batch(const MlpParams& p, const Mat& xs_cols, const Mat& cotangents);

/// Batched parameter-VJP: accumulates sum_i (d f(x_i)/d theta)^T r_i into
/// per-layer gradients. Returns gradients shaped like weights/biases.
struct ParamGrad {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};
ParamGrad param_vjp_batch(const MlpParams& p, const Mat& xs_cols, const Mat& cotangents);

}  // namespace advntk
