#include "advntk/mlp.hpp"

#include "advntk/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace advntk {
namespace {

void apply_phi(Activation act, Mat& h) {
  if (act == Activation::Relu) {
    h = h.cwiseMax(0.0);
  } else {
    h = h.unaryExpr([](double v) { return std::erf(v); });
  }
}

Mat phi_of(Activation act, const Mat& h) {
  Mat out = h;
  apply_phi(act, out);
  return out;
}

Mat phi_prime_of(Activation act, const Mat& h) {
  if (act == Activation::Relu)
    return h.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  return h.unaryExpr([](double v) {
    return 1.1283791670955125738961589031215 * std::exp(-v * v);
  });
}

struct BatchTrace {
  std::vector<Mat> pre;   // h^(l), n_l x M
  std::vector<Mat> post;  // post[0] = input (d x M)
};

/// Forward over column-major samples; fills the trace used by the VJPs.
Mat forward_cols(const MlpParams& p, const Mat& xs_cols, BatchTrace* trace) {
  const int layers = p.num_layers();
  Mat act = xs_cols;
  if (trace) {
    trace->pre.clear();
    trace->post.clear();
    trace->post.push_back(act);
  }
  for (int l = 0; l < layers; ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
    Mat h = scale * (p.weights[l] * act);
    h.colwise() += p.biases[l];
    if (trace) trace->pre.push_back(h);
    if (l + 1 < layers) {
      apply_phi(p.spec.activation, h);
      if (trace) trace->post.push_back(h);
    }
    act = std::move(h);
  }
  return act;  // c x M
}

}  // namespace

int MlpParams::num_params() const {
  int n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += static_cast<int>(weights[l].size() + biases[l].size());
  return n;
}

MlpParams mlp_init(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.hidden_width < 1)
    throw std::invalid_argument("mlp_init: hidden_width must be set");
  MlpParams p;
  p.spec = spec;
  const int layers = spec.depth_L + 1;
  p.weights.reserve(layers);
  p.biases.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    const int rows = spec.layer_width(l + 1);
    const int cols = spec.layer_width(l);
    // Separate streams per (layer, weights/biases) so shapes never shift
    // the draw sequence of other tensors.
    Philox wrng(seed, 2 * static_cast<std::uint64_t>(l));
    Philox brng(seed, 2 * static_cast<std::uint64_t>(l) + 1);
    Mat w(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) w(i, j) = spec.sigma_w * wrng.gaussian();
    Vec b(rows);
    for (int i = 0; i < rows; ++i)
      b(i) = spec.sigma_b == 0.0 ? 0.0 : spec.sigma_b * brng.gaussian();
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Vec mlp_forward(const MlpParams& p, const Vec& x, ForwardTrace* trace) {
  if (x.size() != p.spec.input_dim)
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  BatchTrace bt;
  const Mat out = forward_cols(p, x, trace ? &bt : nullptr);
  if (trace) {
    trace->preacts.clear();
    trace->postacts.clear();
    for (const auto& m : bt.post) trace->postacts.push_back(m.col(0));
    for (const auto& m : bt.pre) trace->preacts.push_back(m.col(0));
  }
  return out.col(0);
}

Mat mlp_forward_batch(const MlpParams& p, const Mat& xs) {
  if (xs.cols() != p.spec.input_dim)
    throw std::invalid_argument("mlp_forward_batch: input dimension mismatch");
  return forward_cols(p, xs.transpose(), nullptr).transpose();
}

Mat input_vjp_batch(const MlpParams& p, const Mat& xs_cols, const Mat& cotangents) {
  const int layers = p.num_layers();
  BatchTrace tr;
  forward_cols(p, xs_cols, &tr);
  Mat delta = cotangents;  // n_{L+1} x M
  for (int l = layers - 1; l >= 0; --l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
    Mat back = scale * (p.weights[l].transpose() * delta);
    if (l > 0) back.array() *= phi_prime_of(p.spec.activation, tr.pre[l - 1]).array();
    delta = std::move(back);
  }
  return delta;  // d x M
}

ParamGrad param_vjp_batch(const MlpParams& p, const Mat& xs_cols, const Mat& cotangents) {
  const int layers = p.num_layers();
  BatchTrace tr;
  forward_cols(p, xs_cols, &tr);
  ParamGrad g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Mat delta = cotangents;
  for (int l = layers - 1; l >= 0; --l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
    g.weights[l].noalias() = scale * (delta * tr.post[l].transpose());
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = scale * (p.weights[l].transpose() * delta);
      delta.array() *= phi_prime_of(p.spec.activation, tr.pre[l - 1]).array();
    }
  }
  return g;
}

Mat param_jacobian(const MlpParams& p, const Vec& x) {
  const int c = p.spec.output_dim;
  const int layers = p.num_layers();
  Mat jac(c, p.num_params());
  for (int k = 0; k < c; ++k) {
    Mat cot = Mat::Zero(c, 1);
    cot(k, 0) = 1.0;
    const ParamGrad g = param_vjp_batch(p, x, cot);
    int off = 0;
    for (int l = 0; l < layers; ++l) {
      const auto& w = g.weights[l];
      jac.block(k, off, 1, w.size()) =
          Eigen::Map<const Eigen::RowVectorXd>(w.data(), w.size());
      off += static_cast<int>(w.size());
      jac.block(k, off, 1, g.biases[l].size()) = g.biases[l].transpose();
      off += static_cast<int>(g.biases[l].size());
    }
  }
  return jac;
}

Mat input_jacobian(const MlpParams& p, const Vec& x) {
  const int c = p.spec.output_dim;
  Mat jac(c, p.spec.input_dim);
  for (int k = 0; k < c; ++k) {
    Mat cot = Mat::Zero(c, 1);
    cot(k, 0) = 1.0;
    jac.row(k) = input_vjp_batch(p, x, cot).col(0).transpose();
  }
  return jac;
}

Mat empirical_ntk(const MlpParams& p, const Mat& xs) {
  const int m = static_cast<int>(xs.rows());
  const int c = p.spec.output_dim;
  const int layers = p.num_layers();
  const Mat xcols = xs.transpose();

  BatchTrace tr;
  forward_cols(p, xcols, &tr);

  // Per output channel k, backprop deltas delta^(l)_k in one batched sweep.
  // NTK((i,k),(j,k')) = sum_l (delta_k^l(x_i) . delta_k'^l(x_j)) *
  //                     (post^{l-1}(x_i) . post^{l-1}(x_j) / n_{l-1})
  //                   + delta dot for the bias.
  std::vector<std::vector<Mat>> deltas(c);  // [k][l] -> n_l x M
  for (int k = 0; k < c; ++k) {
    deltas[k].resize(layers);
    Mat delta = Mat::Zero(c, m);
    delta.row(k).setOnes();
    deltas[k][layers - 1] = delta;
    for (int l = layers - 1; l >= 1; --l) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
      Mat back = scale * (p.weights[l].transpose() * deltas[k][l]);
      back.array() *= phi_prime_of(p.spec.activation, tr.pre[l - 1]).array();
      deltas[k][l - 1] = std::move(back);
    }
  }

  Mat ntk = Mat::Zero(static_cast<Eigen::Index>(m) * c, static_cast<Eigen::Index>(m) * c);
  for (int l = 0; l < layers; ++l) {
    const double inv_n = 1.0 / static_cast<double>(p.weights[l].cols());
    const Mat act_gram = inv_n * (tr.post[l].transpose() * tr.post[l]);  // M x M
    for (int k = 0; k < c; ++k) {
      for (int k2 = k; k2 < c; ++k2) {
        const Mat dgram = deltas[k][l].transpose() * deltas[k2][l];  // M x M
        const Mat contrib = dgram.cwiseProduct(act_gram) + dgram;    // weights + bias
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            ntk(i * c + k, j * c + k2) += contrib(i, j);
            if (k2 != k) ntk(i * c + k2, j * c + k) += contrib(j, i);
          }
      }
    }
  }
  // Symmetrize away last-bit asymmetry from the accumulation order.
  ntk = 0.5 * (ntk + ntk.transpose()).eval();
  return ntk;
}

std::vector<Mat> empirical_ark_diag(const MlpParams& p, const Mat& xs) {
  const int m = static_cast<int>(xs.rows());
  std::vector<Mat> blocks(m);
  parallel_for(m, [&](int i) {
    const Mat j = input_jacobian(p, xs.row(i).transpose());
    blocks[i] = j * j.transpose();
  });
  return blocks;
}

}  // namespace advntk
