#pragma once

#include "advntk/common.hpp"

namespace advntk {

/// Matrix exponential by scaling-and-squaring with the degree-13 Pade
/// approximant. Throws for non-square or non-finite input, or when the
/// dimension exceeds `dim_cap` (guards accidental huge dense exponentials).
Mat expm(const Mat& A, int dim_cap = 4096);

/// Adjoint of the Frechet derivative of expm at A, applied to G: the unique
/// matrix satisfying <expm_frechet_adjoint(A, G), E> = <G, d expm(A)[E]> in
/// the Frobenius inner product. Computed as the off-diagonal block of the
/// 2n x 2n exponential of [[A^T, G], [0, A^T]]; the block-triangular
/// structure is exploited so the cost stays at a few n x n products.
Mat expm_frechet_adjoint(const Mat& A, const Mat& G, int dim_cap = 4096);

/// Frechet derivative d expm(A)[E] (directional), same block method.
Mat expm_frechet(const Mat& A, const Mat& E, int dim_cap = 4096);

}  // namespace advntk
