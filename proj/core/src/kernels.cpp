#include "advntk/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace advntk {
namespace {

void check_kernel_spec(const NetSpec& spec) {
  // Kernel recursions also accept the degenerate depth 0 (single affine
  // layer); finite nets require depth_L >= 1 and validate separately.
  if (spec.depth_L < 0) throw std::invalid_argument("kernels: depth_L must be >= 0");
  if (spec.input_dim < 1) throw std::invalid_argument("kernels: input_dim must be >= 1");
  if (!(spec.sigma_w > 0.0) || !(spec.sigma_b >= 0.0))
    throw std::invalid_argument("kernels: invalid sigma_w/sigma_b");
}

void check_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw std::invalid_argument(std::string("kernels: non-finite ") + what);
}

struct PairState {
  double s11, s12, s22;  // Sigma^(l) moments
  double theta;          // Theta^inf_theta^(l)
  double ark;            // Theta^inf_x^(l)
};

PairState base_state(const NetSpec& spec, double xx, double xy, double yy) {
  const double d = static_cast<double>(spec.input_dim);
  const double sw2 = spec.sigma_w * spec.sigma_w;
  const double sb2 = spec.sigma_b * spec.sigma_b;
  PairState s;
  s.s11 = sw2 * xx / d + sb2;
  s.s12 = sw2 * xy / d + sb2;
  s.s22 = sw2 * yy / d + sb2;
  s.theta = xy / d + 1.0;
  s.ark = sw2;
  return s;
}

double diag_sigma_step(const NetSpec& spec, double s) {
  const BivariateMoment m{s, s, s};
  return spec.sigma_w * spec.sigma_w * gauss_ee(spec.activation, m) +
         spec.sigma_b * spec.sigma_b;
}

void pair_step(const NetSpec& spec, PairState& s) {
  const double sw2 = spec.sigma_w * spec.sigma_w;
  const BivariateMoment m{s.s11, s.s12, s.s22};
  const double ee = gauss_ee(spec.activation, m);
  const double dd = gauss_dd(spec.activation, m);
  s.theta = sw2 * s.theta * dd + ee + 1.0;
  s.ark = sw2 * s.ark * dd;
  s.s12 = sw2 * ee + spec.sigma_b * spec.sigma_b;
  s.s11 = diag_sigma_step(spec, s.s11);
  s.s22 = diag_sigma_step(spec, s.s22);
}

/// Forward-mode companion of PairState: partials with respect to the three
/// base quantities that depend on x, namely (Sigma^(1)(x,x), Sigma^(1)(x,x'),
/// Theta^(1)). Everything else in the recursion is constant in x.
struct PairGradState {
  PairState v;
  double s11g[3], s12g[3], thetag[3], arkg[3];
};

PairGradState base_grad_state(const NetSpec& spec, double xx, double xy, double yy) {
  PairGradState g;
  g.v = base_state(spec, xx, xy, yy);
  for (int k = 0; k < 3; ++k) g.s11g[k] = g.s12g[k] = g.thetag[k] = g.arkg[k] = 0.0;
  g.s11g[0] = 1.0;
  g.s12g[1] = 1.0;
  g.thetag[2] = 1.0;
  return g;
}

void pair_grad_step(const NetSpec& spec, PairGradState& g) {
  const double sw2 = spec.sigma_w * spec.sigma_w;
  PairState& s = g.v;
  const BivariateMoment m{s.s11, s.s12, s.s22};
  const double ee = gauss_ee(spec.activation, m);
  const double dd = gauss_dd(spec.activation, m);
  const MomentPartials pe = gauss_ee_partials(spec.activation, m);
  const MomentPartials pd = gauss_dd_partials(spec.activation, m);

  // Diagonal chain d s11' / d s11 (all three moment slots equal s11).
  const BivariateMoment md{s.s11, s.s11, s.s11};
  const MomentPartials pdg = gauss_ee_partials(spec.activation, md);
  const double diag_chain = sw2 * (pdg.d11 + pdg.d12 + pdg.d22);

  double eeg[3], ddg[3];
  for (int k = 0; k < 3; ++k) {
    eeg[k] = pe.d11 * g.s11g[k] + pe.d12 * g.s12g[k];  // s22 is constant in x
    ddg[k] = pd.d11 * g.s11g[k] + pd.d12 * g.s12g[k];
  }
  for (int k = 0; k < 3; ++k) {
    g.thetag[k] = sw2 * (g.thetag[k] * dd + s.theta * ddg[k]) + eeg[k];
    g.arkg[k] = sw2 * (g.arkg[k] * dd + s.ark * ddg[k]);
    g.s12g[k] = sw2 * eeg[k];
    g.s11g[k] = diag_chain * g.s11g[k];
  }

  s.theta = sw2 * s.theta * dd + ee + 1.0;
  s.ark = sw2 * s.ark * dd;
  s.s12 = sw2 * ee + spec.sigma_b * spec.sigma_b;
  s.s11 = diag_sigma_step(spec, s.s11);
  s.s22 = diag_sigma_step(spec, s.s22);
}

PairState run_pair(const NetSpec& spec, double xx, double xy, double yy) {
  PairState s = base_state(spec, xx, xy, yy);
  for (int l = 0; l < spec.depth_L; ++l) pair_step(spec, s);
  return s;
}

}  // namespace

Mat KernelGram::materialize() const {
  Mat full = Mat::Zero(static_cast<Eigen::Index>(m) * c, static_cast<Eigen::Index>(m) * c);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < c; ++k) full(i * c + k, j * c + k) = scalars(i, j);
  return full;
}

bool KernelGram::is_psd(double rel_tol) const {
  if (scalars.rows() != m || scalars.cols() != m) return false;
  if ((scalars - scalars.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Mat> eig(scalars, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  return eig.eigenvalues().minCoeff() >= -rel_tol * std::max(lmax, 0.0);
}

double nngp_sigma(const NetSpec& spec, int layer, const Vec& x, const Vec& x2) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  check_finite(x2, "x2");
  if (layer < 1 || layer > spec.depth_L + 1)
    throw std::invalid_argument("nngp_sigma: layer out of range");
  if (x.size() != spec.input_dim || x2.size() != spec.input_dim)
    throw std::invalid_argument("nngp_sigma: input dimension mismatch");
  PairState s = base_state(spec, x.dot(x), x.dot(x2), x2.dot(x2));
  for (int l = 1; l < layer; ++l) {
    BivariateMoment m{s.s11, s.s12, s.s22};
    m.validate();  // surfaces numerical breakdown as an error
    pair_step(spec, s);
  }
  return s.s12;
}

double ntk_theta(const NetSpec& spec, const Vec& x, const Vec& x2) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  check_finite(x2, "x2");
  if (x.size() != spec.input_dim || x2.size() != spec.input_dim)
    throw std::invalid_argument("ntk_theta: input dimension mismatch");
  return run_pair(spec, x.dot(x), x.dot(x2), x2.dot(x2)).theta;
}

double ark_theta_x(const NetSpec& spec, const Vec& x, const Vec& x2) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  check_finite(x2, "x2");
  if (x.size() != spec.input_dim || x2.size() != spec.input_dim)
    throw std::invalid_argument("ark_theta_x: input dimension mismatch");
  return run_pair(spec, x.dot(x), x.dot(x2), x2.dot(x2)).ark;
}

KernelGram ntk_gram(const NetSpec& spec, const Mat& xs) {
  check_kernel_spec(spec);
  const int m = static_cast<int>(xs.rows());
  if (m < 1) throw std::invalid_argument("ntk_gram: need at least one sample");
  if (xs.cols() != spec.input_dim) throw std::invalid_argument("ntk_gram: dim mismatch");
  if (!xs.allFinite()) throw std::invalid_argument("ntk_gram: non-finite input");

  const Mat dots = xs * xs.transpose();
  KernelGram gram;
  gram.m = m;
  gram.c = std::max(spec.output_dim, 1);
  gram.scalars.resize(m, m);
  parallel_for(m, [&](int i) {
    for (int j = i; j < m; ++j) {
      const double v = run_pair(spec, dots(i, i), dots(i, j), dots(j, j)).theta;
      gram.scalars(i, j) = v;
      gram.scalars(j, i) = v;
    }
  });
  return gram;
}

Vec ark_diag(const NetSpec& spec, const Mat& xs) {
  check_kernel_spec(spec);
  const int m = static_cast<int>(xs.rows());
  if (m < 1) throw std::invalid_argument("ark_diag: need at least one sample");
  if (xs.cols() != spec.input_dim) throw std::invalid_argument("ark_diag: dim mismatch");
  Vec out(m);
  parallel_for(m, [&](int i) {
    const double xx = xs.row(i).dot(xs.row(i));
    out(i) = run_pair(spec, xx, xx, xx).ark;
  });
  return out;
}

Vec ntk_cross_row(const NetSpec& spec, const Vec& x, const Mat& xs) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  const int m = static_cast<int>(xs.rows());
  const double xx = x.dot(x);
  const Vec dots = xs * x;
  Vec out(m);
  for (int i = 0; i < m; ++i) {
    const double yy = xs.row(i).dot(xs.row(i));
    out(i) = run_pair(spec, xx, dots(i), yy).theta;
  }
  return out;
}

Vec ntk_grad_x(const NetSpec& spec, const Vec& x, const Vec& x2) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  check_finite(x2, "x2");
  if (x.size() != spec.input_dim || x2.size() != spec.input_dim)
    throw std::invalid_argument("ntk_grad_x: input dimension mismatch");
  PairGradState g = base_grad_state(spec, x.dot(x), x.dot(x2), x2.dot(x2));
  for (int l = 0; l < spec.depth_L; ++l) pair_grad_step(spec, g);
  const double d = static_cast<double>(spec.input_dim);
  const double sw2 = spec.sigma_w * spec.sigma_w;
  // Chain through the base quantities: Sigma11 = sw2 |x|^2/d + sb2,
  // Sigma12 = sw2 x.x2/d + sb2, Theta1 = x.x2/d + 1.
  return (g.thetag[0] * 2.0 * sw2 / d) * x +
         (g.thetag[1] * sw2 / d + g.thetag[2] / d) * x2;
}

Vec ntk_weighted_grad_x(const NetSpec& spec, const Vec& x, const Mat& xs,
                        const Vec& beta) {
  check_kernel_spec(spec);
  check_finite(x, "x");
  const int m = static_cast<int>(xs.rows());
  if (beta.size() != m) throw std::invalid_argument("ntk_weighted_grad_x: beta size");
  const double d = static_cast<double>(spec.input_dim);
  const double sw2 = spec.sigma_w * spec.sigma_w;
  const double xx = x.dot(x);
  const Vec dots = xs * x;

  double self_coef = 0.0;  // multiplies x
  Vec row_coef = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    const double yy = xs.row(i).dot(xs.row(i));
    PairGradState g = base_grad_state(spec, xx, dots(i), yy);
    for (int l = 0; l < spec.depth_L; ++l) pair_grad_step(spec, g);
    self_coef += beta(i) * g.thetag[0] * 2.0 * sw2 / d;
    row_coef(i) = beta(i) * (g.thetag[1] * sw2 / d + g.thetag[2] / d);
  }
  return self_coef * x + xs.transpose() * row_coef;
}

}  // namespace advntk
