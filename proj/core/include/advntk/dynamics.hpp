#pragma once

#include "advntk/common.hpp"
#include "advntk/kernels.hpp"
#include "advntk/schedule.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace advntk {

/// Frozen ingredients of the linearized AT dynamics: the NTK Gram at
/// initialization (dense Mc x Mc, sample-major blocks), per-sample ARK
/// diagonal blocks, and the initial outputs/targets on the training set.
/// Construction fails when the Gram is not invertible
/// (lambda_min <= 1e-10 * lambda_max).
struct LinearizedState {
  int m = 0;
  int c = 1;
  Mat gram;                    // Mc x Mc
  std::vector<Mat> ark_blocks; // M blocks, c x c
  Vec f0_train;                // Mc
  Vec y;                       // Mc
  Eigen::LDLT<Mat> factor;     // shared, read-only after construction

  static LinearizedState make(Mat gram, std::vector<Mat> ark_blocks, Vec f0_train,
                              Vec y);
  /// From a scalar-backed analytic Gram (blocks = scalar * I_c).
  static LinearizedState make(const KernelGram& gram, const Vec& ark_diag,
                              Vec f0_train, Vec y);

  Vec solve(const Vec& rhs) const { return factor.solve(rhs); }
};

/// Block-diagonal regularization matrix at time t:
/// block i = integral_0^t exp(ARK_ii * eta_i(tau) * S) dtau.
struct XiMatrix {
  std::vector<Mat> blocks;  // M of c x c
  double t = 0.0;
  Mat full() const;
};

/// Composite-Simpson quadrature per sample block (quad_steps even panels),
/// with the exact shortcut t * exp(ARK_ii * eta_i * S) for constant rates.
XiMatrix xi_matrix(const LinearizedState& state, const RateSchedule& sched, double t,
                   int quad_steps = 64);

/// Closed-form linearized AT output at one test point:
/// f0(x) - Theta(x,X) Theta(X,X)^-1 (I - exp(-Theta(X,X) Xi(t))) (f0(X) - y).
/// ntk_cross is c x Mc.
Vec at_closed_form(const LinearizedState& state, const XiMatrix& xi,
                   const Mat& ntk_cross, const Vec& f0_test);

/// Infinite-width ensemble mean: f0 terms drop, Xi entries are scalars from
/// the analytic ARK diagonal. ntk_cross_row holds the M scalar kernel values
/// Theta(x, x_i); the result has gram.c entries.
Vec ensemble_mean_inf(const KernelGram& gram, const Vec& ark_diag,
                      const RateSchedule& sched, double t, const Vec& ntk_cross_row,
                      const Vec& y, int quad_steps = 64);

struct OdeOracleConfig {
  double T = 1.0;
  double dt = 1e-3;
  int inner_steps = 16;
  int record_every = 0;  // 0: record only t = 0 and t = T
};

struct OdeOracleResult {
  std::vector<double> times;
  std::vector<Vec> f_train;  // Mc at each recorded time
  std::vector<Vec> f_test;   // c at each recorded time
};

/// Independent RK4 integration of the linearized AT dynamics: the outer
/// parameter flow on f(X) with, at every RHS evaluation, the inner
/// adversarial search flow integrated by `inner_steps` RK4 steps from the
/// current state. Uses no matrix exponentials or quadrature, so it is a
/// genuine cross-check of the closed form.
OdeOracleResult ode_oracle_linearized(const LinearizedState& state,
                                      const RateSchedule& sched, const Mat& ntk_cross,
                                      const Vec& f0_test, const OdeOracleConfig& cfg);

/// Scale/decomposition view of exp(-Gram * Xi(t)) used by the long-run
/// analysis: ARK block diagonal = Q D Q^T, a(t) the largest integral of
/// exp(D eta S), A(t) the unit-scale remainder, and the similarity-
/// transformed exponential which must agree with the direct evaluation.
struct DegenerationDecomposition {
  Mat Q;              // Mc x Mc block-diagonal orthogonal
  Vec D;              // Mc eigenvalues of the ARK blocks
  double a_t = 0.0;
  Vec A_diag;         // Mc entries of A(t)
  Mat exp_term;       // via the decomposition (or directly when a_t = 0)
  double residual = 0.0;  // max-abs difference against direct expm
  bool ark_positive_definite = true;
};

DegenerationDecomposition degeneration_decompose(const LinearizedState& state,
                                                 const RateSchedule& sched, double t,
                                                 int quad_steps = 64);

struct DegenerationReport {
  std::vector<double> t_grid;
  std::vector<double> exp_norm;                // ||exp(-Gram Xi(t))||_2
  std::vector<double> dist_to_standard_limit;  // |f_at(t) - f_std_limit|_inf
  double lambda_min_H = 0.0;                   // at the grid-end A proxy
  double lambda_max_H = 0.0;
  bool degenerate_regime = true;  // lambda_min(H) above tolerance
  Vec standard_limit;             // f0(x) - Theta(x,X) Theta^-1 (f0(X) - y)
  Vec at_final;                   // closed form at the last grid point
};

/// Norm trace of the exponential term along an increasing t grid, the
/// spectral interval of H = A^(1/2) Q^T Gram Q A^(1/2) with A taken at the
/// grid end (finite proxy for the infinite-time scale matrix), and the
/// regime flag: lambda_min(H) <= 1e-10 lambda_max(H) marks the
/// non-degenerate large-perturbation case.
DegenerationReport degeneration_limit_check(const LinearizedState& state,
                                            const RateSchedule& sched,
                                            const std::vector<double>& t_grid,
                                            const Mat& ntk_cross, const Vec& f0_test,
                                            int quad_steps = 64);

/// Spectral norm (largest singular value).
double spectral_norm(const Mat& A);

}  // namespace advntk
