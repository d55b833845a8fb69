#include "advntk/dynamics.hpp"

#include "advntk/expm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace advntk {
namespace {

void check_even_panels(int quad_steps) {
  if (quad_steps < 2 || quad_steps % 2 != 0)
    throw std::invalid_argument("quadrature: quad_steps must be even and >= 2");
}

/// Composite Simpson over [0, t] of the matrix integrand
/// exp(block * eta(tau) * S).
Mat simpson_exp_block(const Mat& block, const RateFn& eta, double S, double t,
                      int quad_steps) {
  const int n = static_cast<int>(block.rows());
  if (t == 0.0) return Mat::Zero(n, n);
  if (eta.is_constant()) return t * expm(block * (eta(0.0) * S));
  check_even_panels(quad_steps);
  const double h = t / quad_steps;
  Mat acc = Mat::Zero(n, n);
  for (int k = 0; k <= quad_steps; ++k) {
    const double w = (k == 0 || k == quad_steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    acc += w * expm(block * (eta(k * h) * S));
  }
  return (h / 3.0) * acc;
}

/// Same quadrature for a scalar exponent (diagonalized path).
double simpson_exp_scalar(double coef, const RateFn& eta, double S, double t,
                          int quad_steps) {
  if (t == 0.0) return 0.0;
  if (eta.is_constant()) return t * std::exp(coef * eta(0.0) * S);
  check_even_panels(quad_steps);
  const double h = t / quad_steps;
  double acc = 0.0;
  for (int k = 0; k <= quad_steps; ++k) {
    const double w = (k == 0 || k == quad_steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::exp(coef * eta(k * h) * S);
  }
  return h / 3.0 * acc;
}

Mat block_diag_from(const std::vector<Mat>& blocks) {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.rows());
  Mat out = Mat::Zero(n, n);
  int off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += static_cast<int>(b.rows());
  }
  return out;
}

}  // namespace

double spectral_norm(const Mat& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

LinearizedState LinearizedState::make(Mat gram, std::vector<Mat> ark_blocks,
                                      Vec f0_train, Vec y) {
  LinearizedState st;
  st.m = static_cast<int>(ark_blocks.size());
  if (st.m == 0) throw std::invalid_argument("LinearizedState: no samples");
  st.c = static_cast<int>(ark_blocks.front().rows());
  const Eigen::Index n = static_cast<Eigen::Index>(st.m) * st.c;
  if (gram.rows() != n || gram.cols() != n)
    throw std::invalid_argument("LinearizedState: gram shape mismatch");
  if (f0_train.size() != n || y.size() != n)
    throw std::invalid_argument("LinearizedState: vector length mismatch");

  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (gram + gram.transpose()),
                                         Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 1e-10 * lmax))
    throw std::runtime_error("LinearizedState: Gram is numerically singular");

  st.gram = std::move(gram);
  st.ark_blocks = std::move(ark_blocks);
  st.f0_train = std::move(f0_train);
  st.y = std::move(y);
  st.factor.compute(st.gram);
  return st;
}

LinearizedState LinearizedState::make(const KernelGram& gram, const Vec& arkd,
                                      Vec f0_train, Vec y) {
  std::vector<Mat> blocks(gram.m);
  for (int i = 0; i < gram.m; ++i) blocks[i] = arkd(i) * Mat::Identity(gram.c, gram.c);
  return make(gram.materialize(), std::move(blocks), std::move(f0_train), std::move(y));
}

Mat XiMatrix::full() const { return block_diag_from(blocks); }

XiMatrix xi_matrix(const LinearizedState& state, const RateSchedule& sched, double t,
                   int quad_steps) {
  if (t < 0.0) throw std::invalid_argument("xi_matrix: t must be >= 0");
  sched.validate();
  if (sched.size() != state.m)
    throw std::invalid_argument("xi_matrix: schedule size mismatch");
  XiMatrix xi;
  xi.t = t;
  xi.blocks.resize(state.m);
  parallel_for(state.m, [&](int i) {
    xi.blocks[i] =
        simpson_exp_block(state.ark_blocks[i], sched.eta(i), sched.horizon_S, t, quad_steps);
  });
  return xi;
}

Vec at_closed_form(const LinearizedState& state, const XiMatrix& xi,
                   const Mat& ntk_cross, const Vec& f0_test) {
  const Eigen::Index n = state.gram.rows();
  if (ntk_cross.cols() != n)
    throw std::invalid_argument("at_closed_form: ntk_cross shape mismatch");
  const Mat decay = expm(-(state.gram * xi.full()));
  const Vec residual = state.f0_train - state.y;
  const Vec damped = residual - decay * residual;  // (I - e^{-G Xi}) r
  return f0_test - ntk_cross * state.solve(damped);
}

Vec ensemble_mean_inf(const KernelGram& gram, const Vec& ark_diag,
                      const RateSchedule& sched, double t, const Vec& ntk_cross_row,
                      const Vec& y, int quad_steps) {
  sched.validate();
  const int m = gram.m;
  const int c = gram.c;
  if (ark_diag.size() != m || ntk_cross_row.size() != m)
    throw std::invalid_argument("ensemble_mean_inf: size mismatch");
  if (y.size() != static_cast<Eigen::Index>(m) * c)
    throw std::invalid_argument("ensemble_mean_inf: y length mismatch");
  if (sched.size() != m) throw std::invalid_argument("ensemble_mean_inf: schedule size");

  Vec xi(m);
  for (int i = 0; i < m; ++i)
    xi(i) = simpson_exp_scalar(ark_diag(i), sched.eta(i), sched.horizon_S, t, quad_steps);

  // Scalar Gram times Xi = S * diag(xi) acts channel by channel.
  Eigen::LDLT<Mat> factor(gram.scalars);
  const Mat decay = expm(-(gram.scalars * xi.asDiagonal().toDenseMatrix()));
  Vec out = Vec::Zero(c);
  Vec yk(m);
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < m; ++i) yk(i) = y(static_cast<Eigen::Index>(i) * c + k);
    const Vec damped = yk - decay * yk;
    out(k) = ntk_cross_row.dot(factor.solve(damped));
  }
  return out;
}

OdeOracleResult ode_oracle_linearized(const LinearizedState& state,
                                      const RateSchedule& sched, const Mat& ntk_cross,
                                      const Vec& f0_test, const OdeOracleConfig& cfg) {
  sched.validate();
  if (cfg.dt <= 0.0 || cfg.T < 0.0 || cfg.inner_steps < 1)
    throw std::invalid_argument("ode_oracle: bad configuration");
  const Eigen::Index n = state.gram.rows();
  const int c = state.c;

  const Mat ark_full = block_diag_from(state.ark_blocks);

  // Inner adversarial flow at frozen training time t: from phi(0) = f,
  // d phi/ds = ARK * Upsilon(t) * (phi - y), integrated with RK4.
  auto inner_flow = [&](double t, const Vec& f) {
    Mat scaled = ark_full;  // ARK * Upsilon(t): scale column blocks by eta_i(t)
    for (int i = 0; i < state.m; ++i) {
      const double e = sched.eta(i)(t);
      scaled.middleCols(static_cast<Eigen::Index>(i) * c, c) *= e;
    }
    const double h = sched.horizon_S / cfg.inner_steps;
    Vec phi = f;
    for (int s = 0; s < cfg.inner_steps; ++s) {
      const Vec k1 = scaled * (phi - state.y);
      const Vec k2 = scaled * (phi + 0.5 * h * k1 - state.y);
      const Vec k3 = scaled * (phi + 0.5 * h * k2 - state.y);
      const Vec k4 = scaled * (phi + h * k3 - state.y);
      phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return phi;
  };

  // Outer state: (f(X), f(x_test)); both driven by the searched residual.
  struct Rhs {
    Vec df_train;
    Vec df_test;
  };
  auto rhs = [&](double t, const Vec& f_train) {
    const Vec searched = inner_flow(t, f_train);
    const Vec r = searched - state.y;
    Rhs out;
    out.df_train = -(state.gram * r);
    out.df_test = -(ntk_cross * r);
    return out;
  };

  const int steps = static_cast<int>(std::llround(cfg.T / cfg.dt));
  if (std::abs(steps * cfg.dt - cfg.T) > 1e-9 * std::max(1.0, cfg.T))
    throw std::invalid_argument("ode_oracle: dt must divide T");

  OdeOracleResult res;
  Vec f = state.f0_train;
  Vec ftest = f0_test;
  auto record = [&](double t) {
    res.times.push_back(t);
    res.f_train.push_back(f);
    res.f_test.push_back(ftest);
  };
  record(0.0);
  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg.dt;
    const double h = cfg.dt;
    const Rhs k1 = rhs(t, f);
    const Rhs k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1.df_train);
    const Rhs k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2.df_train);
    const Rhs k4 = rhs(t + h, f + h * k3.df_train);
    f += h / 6.0 * (k1.df_train + 2.0 * k2.df_train + 2.0 * k3.df_train + k4.df_train);
    ftest += h / 6.0 * (k1.df_test + 2.0 * k2.df_test + 2.0 * k3.df_test + k4.df_test);
    if (!f.allFinite() || f.cwiseAbs().maxCoeff() > 1e6)
      throw std::runtime_error("ode_oracle: training output diverged at t = " +
                               std::to_string(t + h));
    if (cfg.record_every > 0 && (k + 1) % cfg.record_every == 0 && k + 1 < steps)
      record((k + 1) * cfg.dt);
  }
  record(cfg.T);
  return res;
}

DegenerationDecomposition degeneration_decompose(const LinearizedState& state,
                                                 const RateSchedule& sched, double t,
                                                 int quad_steps) {
  sched.validate();
  const int m = state.m;
  const int c = state.c;
  const Eigen::Index n = static_cast<Eigen::Index>(m) * c;

  DegenerationDecomposition out;
  out.Q = Mat::Zero(n, n);
  out.D = Vec::Zero(n);
  for (int i = 0; i < m; ++i) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(state.ark_blocks[i]);
    out.Q.block(static_cast<Eigen::Index>(i) * c, static_cast<Eigen::Index>(i) * c, c, c) =
        eig.eigenvectors();
    out.D.segment(static_cast<Eigen::Index>(i) * c, c) = eig.eigenvalues();
    if (eig.eigenvalues().minCoeff() <= 0.0) out.ark_positive_definite = false;
  }

  // q(t) entries: integral of exp(D_jj * eta_i * S) per coordinate.
  Vec q(n);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < c; ++k) {
      const Eigen::Index j = static_cast<Eigen::Index>(i) * c + k;
      q(j) = simpson_exp_scalar(out.D(j), sched.eta(i), sched.horizon_S, t, quad_steps);
    }
  out.a_t = q.maxCoeff();

  if (t == 0.0 || out.a_t == 0.0) {
    out.A_diag = Vec::Zero(n);
    out.exp_term = Mat::Identity(n, n);
    out.residual = 0.0;
    return out;
  }
  out.A_diag = q / out.a_t;

  // Direct route: Xi(t) = Q diag(q) Q^T assembled from the same quadrature.
  const Mat xi = out.Q * q.asDiagonal() * out.Q.transpose();
  const Mat direct = expm(-(state.gram * xi));

  if (!out.ark_positive_definite || out.A_diag.minCoeff() <= 0.0) {
    // Decomposition path undefined; report the direct evaluation.
    out.exp_term = direct;
    out.residual = 0.0;
    return out;
  }

  const Vec a_sqrt = out.A_diag.cwiseSqrt();
  const Mat QA = out.Q * a_sqrt.asDiagonal();        // Q A^{1/2}
  const Mat H = QA.transpose() * state.gram * QA;    // A^{1/2} Q^T Gram Q A^{1/2}
  const Mat core = expm(-(out.a_t * H));
  out.exp_term = out.Q * a_sqrt.cwiseInverse().asDiagonal() * core * a_sqrt.asDiagonal() *
                 out.Q.transpose();
  out.residual = (out.exp_term - direct).cwiseAbs().maxCoeff();
  return out;
}

DegenerationReport degeneration_limit_check(const LinearizedState& state,
                                            const RateSchedule& sched,
                                            const std::vector<double>& t_grid,
                                            const Mat& ntk_cross, const Vec& f0_test,
                                            int quad_steps) {
  if (t_grid.empty()) throw std::invalid_argument("degeneration: empty t grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("degeneration: t grid must be increasing");

  DegenerationReport rep;
  rep.t_grid = t_grid;
  const Vec residual0 = state.f0_train - state.y;
  rep.standard_limit = f0_test - ntk_cross * state.solve(residual0);

  for (double t : t_grid) {
    const XiMatrix xi = xi_matrix(state, sched, t, quad_steps);
    const Mat decay = expm(-(state.gram * xi.full()));
    rep.exp_norm.push_back(spectral_norm(decay));
    const Vec f_at = at_closed_form(state, xi, ntk_cross, f0_test);
    rep.dist_to_standard_limit.push_back(
        (f_at - rep.standard_limit).cwiseAbs().maxCoeff());
    if (t == t_grid.back()) rep.at_final = f_at;
  }

  // Spectral interval of H with the scale matrix taken at the grid end.
  const DegenerationDecomposition dec =
      degeneration_decompose(state, sched, t_grid.back(), quad_steps);
  const Vec a_sqrt = dec.A_diag.cwiseMax(0.0).cwiseSqrt();
  const Mat QA = dec.Q * a_sqrt.asDiagonal();
  const Mat H = QA.transpose() * state.gram * QA;
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (H + H.transpose()),
                                         Eigen::EigenvaluesOnly);
  rep.lambda_min_H = eig.eigenvalues().minCoeff();
  rep.lambda_max_H = eig.eigenvalues().maxCoeff();
  rep.degenerate_regime = rep.lambda_min_H > 1e-10 * std::max(rep.lambda_max_H, 0.0);
  return rep;
}

}  // namespace advntk
