#include "advntk/advntk_model.hpp"

#include "advntk/csvio.hpp"
#include "advntk/expm.hpp"
#include "advntk/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace advntk {

SplitPlan SplitPlan::make(int m_total, int m_val, std::uint64_t seed) {
  if (m_val < 1 || m_val >= m_total)
    throw std::invalid_argument("SplitPlan: m_val must be in [1, m_total)");
  std::vector<int> idx(m_total);
  for (int i = 0; i < m_total; ++i) idx[i] = i;
  Philox rng(seed, /*stream=*/0x5917);
  for (int i = m_total - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  SplitPlan plan;
  plan.m_val = m_val;
  plan.seed = seed;
  plan.indices_val.assign(idx.begin(), idx.begin() + m_val);
  plan.indices_opt.assign(idx.begin() + m_val, idx.end());
  return plan;
}

void SplitPlan::validate(int m_total) const {
  if (static_cast<int>(indices_val.size()) != m_val)
    throw std::invalid_argument("SplitPlan: |indices_val| != m_val");
  std::vector<char> seen(m_total, 0);
  auto mark = [&](const std::vector<int>& v) {
    for (int i : v) {
      if (i < 0 || i >= m_total || seen[i])
        throw std::invalid_argument("SplitPlan: indices not a disjoint cover");
      seen[i] = 1;
    }
  };
  mark(indices_val);
  mark(indices_opt);
  for (char s : seen)
    if (!s) throw std::invalid_argument("SplitPlan: indices do not cover the set");
}

Vec AdvNtkModel::channel_varpi(int k) const {
  Vec v(m_opt);
  for (int i = 0; i < m_opt; ++i) v(i) = varpi(static_cast<Eigen::Index>(i) * c + k);
  return v;
}

Vec AdvNtkModel::channel_y(int k) const {
  Vec v(m_opt);
  for (int i = 0; i < m_opt; ++i) v(i) = ys_opt(static_cast<Eigen::Index>(i) * c + k);
  return v;
}

void AdvNtkModel::refresh() {
  exp_cache.resize(c);
  coeff.resize(m_opt, c);
  parallel_for(c, [&](int k) {
    const Vec w = channel_varpi(k);
    exp_cache[k] = expm(-(gram.scalars * w.asDiagonal().toDenseMatrix()));
    const Vec yk = channel_y(k);
    coeff.col(k) = gram_llt.solve(yk - exp_cache[k] * yk);
  });
}

AdvNtkModel advntk_make(const NetSpec& spec, const Mat& xs_opt, const Vec& ys_opt) {
  AdvNtkModel model;
  model.spec = spec;
  model.xs_opt = xs_opt;
  model.ys_opt = ys_opt;
  model.m_opt = static_cast<int>(xs_opt.rows());
  model.c = spec.output_dim;
  if (ys_opt.size() != static_cast<Eigen::Index>(model.m_opt) * model.c)
    throw std::invalid_argument("advntk_make: ys length mismatch");
  model.gram = ntk_gram(spec, xs_opt);
  model.gram_llt.compute(model.gram.scalars);
  if (model.gram_llt.info() != Eigen::Success)
    throw std::runtime_error("advntk_make: NTK Gram is not positive definite");
  model.varpi = Vec::Zero(static_cast<Eigen::Index>(model.m_opt) * model.c);
  model.refresh();
  return model;
}

Vec advntk_eval(const AdvNtkModel& model, const Vec& x) {
  const Vec row = ntk_cross_row(model.spec, x, model.xs_opt);
  return model.coeff.transpose() * row;
}

Vec advntk_grad_varpi(const AdvNtkModel& model, const Mat& batch_x, const Vec& batch_y) {
  const int b = static_cast<int>(batch_x.rows());
  if (b < 1) throw std::invalid_argument("advntk_grad_varpi: empty batch");
  if (batch_y.size() != static_cast<Eigen::Index>(b) * model.c)
    throw std::invalid_argument("advntk_grad_varpi: batch_y length mismatch");

  Mat rows(model.m_opt, b);
  parallel_for(b, [&](int j) {
    rows.col(j) = ntk_cross_row(model.spec, batch_x.row(j).transpose(), model.xs_opt);
  });
  Mat resid(b, model.c);  // f(x_j) - y_j per row
  for (int j = 0; j < b; ++j)
    resid.row(j) =
        (model.coeff.transpose() * rows.col(j)).transpose() -
        batch_y.segment(static_cast<Eigen::Index>(j) * model.c, model.c).transpose();

  Vec grad = Vec::Zero(model.varpi.size());
  parallel_for(model.c, [&](int k) {
    // Loss cotangent of E_k is -(S^-1 u_k) y_k^T, u_k = sum_j resid_jk rows_j;
    // the chain through A = -S diag(varpi_k) lands on the diagonal of S adj.
    const Vec u = rows * resid.col(k);
    const Mat cotangent = -(model.gram_llt.solve(u)) * model.channel_y(k).transpose();
    const Vec w = model.channel_varpi(k);
    const Mat A = -(model.gram.scalars * w.asDiagonal().toDenseMatrix());
    const Mat adj = expm_frechet_adjoint(A, cotangent);
    const Vec diag = (model.gram.scalars * adj).diagonal();
    for (int i = 0; i < model.m_opt; ++i)
      grad(static_cast<Eigen::Index>(i) * model.c + k) = -diag(i);
  });
  return grad;
}

Vec advntk_grad_x(const AdvNtkModel& model, const Vec& x, const Vec& y) {
  const Vec row = ntk_cross_row(model.spec, x, model.xs_opt);
  const Vec resid = model.coeff.transpose() * row - y;  // c entries
  const Vec beta = model.coeff * resid;
  return ntk_weighted_grad_x(model.spec, x, model.xs_opt, beta);
}

AdvNtkTrainResult advntk_train(const Dataset& data, const SplitPlan& plan,
                               const AdvNtkTrainConfig& cfg) {
  data.validate();
  plan.validate(data.m);
  cfg.pgd.validate();
  if (cfg.iters < 0 || cfg.batch < 1 || !(cfg.lr > 0.0))
    throw std::invalid_argument("advntk_train: bad configuration");
  NetSpec spec = cfg.net;
  spec.input_dim = data.d;
  spec.output_dim = data.c;

  const Dataset opt = data.subset(plan.indices_opt);
  const Dataset val = data.subset(plan.indices_val);

  AdvNtkTrainResult out;
  out.model = advntk_make(spec, opt.xs, opt.ys);
  AdvNtkModel& model = out.model;

  Philox batch_rng(cfg.seed, /*stream=*/0xadf1);
  const int batch = std::min(cfg.batch, val.m);

  for (int iter = 1; iter <= cfg.iters; ++iter) {
    std::vector<int> pick(batch);
    for (int b = 0; b < batch; ++b)
      pick[b] = static_cast<int>(batch_rng.next_below(val.m));

    // Adversarial validation examples against the current model; varpi is
    // frozen during the inner maximization, so the cache stays valid.
    Mat batch_x(batch, data.d);
    Vec batch_y(static_cast<Eigen::Index>(batch) * data.c);
    std::vector<Vec> adv(batch);
    parallel_for(batch, [&](int b) {
      const Vec x = val.xs.row(pick[b]).transpose();
      const Vec y = val.target(pick[b]);
      adv[b] = cfg.pgd.rho > 0.0
                   ? pgd_linf(x, y,
                              [&](const Vec& xx, const Vec& yy) {
                                return advntk_grad_x(model, xx, yy);
                              },
                              cfg.pgd)
                   : x;
    });
    for (int b = 0; b < batch; ++b) {
      batch_x.row(b) = adv[b].transpose();
      batch_y.segment(static_cast<Eigen::Index>(b) * data.c, data.c) = val.target(pick[b]);
    }

    double loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      const Vec f = advntk_eval(model, batch_x.row(b).transpose());
      loss += 0.5 * (f - batch_y.segment(static_cast<Eigen::Index>(b) * data.c, data.c))
                        .squaredNorm();
    }
    out.robust_val_loss.emplace_back(iter, loss / batch);

    const Vec g = advntk_grad_varpi(model, batch_x, batch_y);
    const double gnorm = g.norm();
    if (gnorm == 0.0) {
      ++out.skipped_zero_grad_steps;
      continue;
    }
    model.varpi -= (cfg.lr / gnorm) * g;
    model.refresh();
  }
  return out;
}

KernelRegressor make_ntk_regressor(const NetSpec& spec, const Mat& xs, const Vec& ys) {
  KernelRegressor reg;
  reg.spec = spec;
  reg.xs = xs;
  const int m = static_cast<int>(xs.rows());
  const int c = spec.output_dim;
  if (ys.size() != static_cast<Eigen::Index>(m) * c)
    throw std::invalid_argument("make_ntk_regressor: ys length mismatch");
  const KernelGram gram = ntk_gram(spec, xs);
  Eigen::LLT<Mat> llt(gram.scalars);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("make_ntk_regressor: Gram not positive definite");
  reg.coeff.resize(m, c);
  Vec yk(m);
  for (int k = 0; k < c; ++k) {
    for (int i = 0; i < m; ++i) yk(i) = ys(static_cast<Eigen::Index>(i) * c + k);
    reg.coeff.col(k) = llt.solve(yk);
  }
  return reg;
}

RobustModel advntk_robust_model(const AdvNtkModel& model) {
  RobustModel rm;
  auto shared = std::make_shared<AdvNtkModel>(model);
  rm.predict = [shared](const Vec& x) { return advntk_eval(*shared, x); };
  rm.loss_grad_x = [shared](const Vec& x, const Vec& y) {
    return advntk_grad_x(*shared, x, y);
  };
  return rm;
}

RobustModel regressor_robust_model(const KernelRegressor& reg) {
  RobustModel rm;
  auto shared = std::make_shared<KernelRegressor>(reg);
  rm.predict = [shared](const Vec& x) {
    const Vec row = ntk_cross_row(shared->spec, x, shared->xs);
    return (shared->coeff.transpose() * row).eval();
  };
  rm.loss_grad_x = [shared](const Vec& x, const Vec& y) {
    const Vec row = ntk_cross_row(shared->spec, x, shared->xs);
    const Vec resid = shared->coeff.transpose() * row - y;
    const Vec beta = shared->coeff * resid;
    return ntk_weighted_grad_x(shared->spec, x, shared->xs, beta);
  };
  return rm;
}

namespace {

std::uint64_t gram_checksum(const KernelGram& gram) {
  return fnv1a64(gram.scalars.data(), sizeof(double) * gram.scalars.size());
}

nlohmann::json spec_to_json(const NetSpec& s) {
  return {{"depth", s.depth_L},       {"input_dim", s.input_dim},
          {"output_dim", s.output_dim}, {"activation", activation_name(s.activation)},
          {"sigma_w", s.sigma_w},     {"sigma_b", s.sigma_b},
          {"hidden_width", s.hidden_width}};
}

NetSpec spec_from_json(const nlohmann::json& j) {
  NetSpec s;
  s.depth_L = j.at("depth").get<int>();
  s.input_dim = j.at("input_dim").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  const std::string act = j.at("activation").get<std::string>();
  if (act == "erf")
    s.activation = Activation::Erf;
  else if (act == "relu")
    s.activation = Activation::Relu;
  else
    throw std::invalid_argument("model record: unknown activation " + act);
  s.sigma_w = j.at("sigma_w").get<double>();
  s.sigma_b = j.at("sigma_b").get<double>();
  s.hidden_width = j.at("hidden_width").get<int>();
  return s;
}

}  // namespace

void save_advntk_model(const AdvNtkModel& model, const std::string& path) {
  nlohmann::json j;
  j["format"] = "advntk-model-v1";
  j["net"] = spec_to_json(model.spec);
  j["m_opt"] = model.m_opt;
  j["d"] = static_cast<int>(model.xs_opt.cols());
  j["c"] = model.c;
  std::vector<double> xs(model.xs_opt.size());
  for (int i = 0; i < model.m_opt; ++i)
    for (int k = 0; k < model.xs_opt.cols(); ++k)
      xs[static_cast<std::size_t>(i) * model.xs_opt.cols() + k] = model.xs_opt(i, k);
  j["xs_opt"] = xs;
  j["ys_opt"] = std::vector<double>(model.ys_opt.data(),
                                    model.ys_opt.data() + model.ys_opt.size());
  j["varpi"] =
      std::vector<double>(model.varpi.data(), model.varpi.data() + model.varpi.size());
  j["gram_checksum"] = hex64(gram_checksum(model.gram));
  atomic_write_file(path, j.dump(2) + "\n");
}

AdvNtkModel load_advntk_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("model record: cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("format").get<std::string>() != "advntk-model-v1")
    throw std::runtime_error("model record: unknown format");
  const NetSpec spec = spec_from_json(j.at("net"));
  const int m = j.at("m_opt").get<int>();
  const int d = j.at("d").get<int>();
  const int c = j.at("c").get<int>();
  const auto xs_flat = j.at("xs_opt").get<std::vector<double>>();
  const auto ys_flat = j.at("ys_opt").get<std::vector<double>>();
  const auto varpi_flat = j.at("varpi").get<std::vector<double>>();
  if (static_cast<int>(xs_flat.size()) != m * d ||
      static_cast<int>(ys_flat.size()) != m * c ||
      static_cast<int>(varpi_flat.size()) != m * c)
    throw std::runtime_error("model record: inconsistent array lengths");
  Mat xs(m, d);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < d; ++k) xs(i, k) = xs_flat[static_cast<std::size_t>(i) * d + k];
  Vec ys = Eigen::Map<const Vec>(ys_flat.data(), static_cast<Eigen::Index>(ys_flat.size()));

  AdvNtkModel model = advntk_make(spec, xs, ys);
  const std::string want = j.at("gram_checksum").get<std::string>();
  const std::string got = hex64(gram_checksum(model.gram));
  if (want != got)
    throw std::runtime_error("model record: Gram checksum mismatch (" + want +
                             " vs recomputed " + got + ")");
  model.varpi =
      Eigen::Map<const Vec>(varpi_flat.data(), static_cast<Eigen::Index>(varpi_flat.size()));
  model.refresh();
  return model;
}

}  // namespace advntk
