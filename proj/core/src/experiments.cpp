#include "advntk/experiments.hpp"

#include "advntk/csvio.hpp"
#include "advntk/gradflow.hpp"
#include "advntk/rng.hpp"
#include "advntk/sgd_at.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace advntk {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where,
                const std::vector<const char*>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

NetSpec parse_net(const json& j) {
  check_keys(j, "net",
             {"depth", "input_dim", "output_dim", "activation", "sigma_w", "sigma_b",
              "hidden_width"});
  NetSpec s;
  s.depth_L = j.value("depth", 3);
  s.input_dim = j.value("input_dim", 1);
  s.output_dim = j.value("output_dim", 1);
  const std::string act = j.value("activation", "erf");
  if (act == "erf")
    s.activation = Activation::Erf;
  else if (act == "relu")
    s.activation = Activation::Relu;
  else
    throw std::invalid_argument("config: unknown activation \"" + act + "\"");
  s.sigma_w = j.value("sigma_w", 1.76);
  s.sigma_b = j.value("sigma_b", 0.18);
  s.hidden_width = j.value("hidden_width", 0);
  return s;
}

DatasetSpec parse_dataset(const json& j, const std::string& where) {
  DatasetSpec d;
  check_keys(j, where,
             {"source", "n_per_class", "dim", "classes", "sep", "paths", "subset", "m",
              "c", "seed"});
  d.source = j.value("source", "gaussian");
  if (d.source != "blobs" && d.source != "cifar10" && d.source != "gaussian")
    throw std::invalid_argument("config: unknown dataset source \"" + d.source + "\"");
  d.n_per_class = j.value("n_per_class", 100);
  d.dim = j.value("dim", 4);
  d.classes = j.value("classes", 2);
  d.sep = j.value("sep", 6.0);
  if (j.contains("paths")) d.paths = j.at("paths").get<std::vector<std::string>>();
  d.subset = j.value("subset", 0);
  d.m = j.value("m", 8);
  d.c = j.value("c", 1);
  if (j.contains("seed")) d.seed = j.at("seed").get<std::uint64_t>();
  return d;
}

RateFn parse_eta(const json& j, const std::string& where) {
  check_keys(j, where,
             {"kind", "value", "knots", "values", "offset", "amplitude", "omega",
              "index"});
  const std::string kind = j.value("kind", "constant");
  RateFn fn;
  if (kind == "constant") {
    fn = RateFn::constant(j.value("value", 0.0));
  } else if (kind == "piecewise_linear") {
    fn = RateFn::piecewise_linear(j.at("knots").get<std::vector<double>>(),
                                  j.at("values").get<std::vector<double>>());
  } else if (kind == "sinusoid") {
    fn = RateFn::sinusoid(j.value("offset", 0.0), j.value("amplitude", 0.0),
                          j.value("omega", 1.0));
  } else {
    throw std::invalid_argument("config: unknown eta kind \"" + kind + "\"");
  }
  fn.validate();
  return fn;
}

PgdConfig parse_pgd(const json& j) {
  check_keys(j, "pgd", {"rho", "steps", "alpha", "clamp_lo", "clamp_hi", "random_start"});
  PgdConfig p;
  p.rho = j.value("rho", 0.0);
  p.steps_K = j.value("steps", 10);
  p.alpha = j.value("alpha", -1.0);
  if (j.contains("clamp_lo") != j.contains("clamp_hi"))
    throw std::invalid_argument("config: clamp_lo/clamp_hi must appear together");
  if (j.contains("clamp_lo")) {
    p.has_clamp_box = true;
    p.clamp_lo = j.at("clamp_lo").get<double>();
    p.clamp_hi = j.at("clamp_hi").get<double>();
  }
  p.random_start = j.value("random_start", false);
  p.validate();
  return p;
}

const std::vector<std::string>& allowed_experiments() {
  static const std::vector<std::string> kinds = {"kernel-check", "dynamics-check",
                                                 "degeneration", "train-advntk",
                                                 "train-at",     "eval"};
  return kinds;
}

std::vector<const char*> top_level_keys(const std::string& experiment) {
  if (experiment == "kernel-check")
    return {"experiment", "seed", "output_dir", "net", "dataset", "widths",
            "seeds_per_width"};
  if (experiment == "dynamics-check")
    return {"experiment",   "seed",     "output_dir", "net", "net_seed",
            "dataset",      "schedule", "time_T",     "dt",  "inner_steps",
            "record_every", "quad_steps"};
  if (experiment == "degeneration")
    return {"experiment", "seed",     "output_dir", "net", "net_seed",
            "dataset",    "schedule", "t_grid",     "quad_steps"};
  if (experiment == "train-advntk")
    return {"experiment",   "seed",  "output_dir", "net",   "dataset",
            "test_dataset", "pgd",   "m_val",      "iters", "lr",
            "batch",        "eval_limit", "compare_ntk_baseline"};
  if (experiment == "train-at")
    return {"experiment", "seed",         "output_dir",   "net",        "net_seed",
            "dataset",    "test_dataset", "pgd",          "iters",      "batch",
            "lr",         "momentum",     "weight_decay", "eval_every", "probe_size",
            "eval_limit"};
  if (experiment == "eval")
    return {"experiment", "seed", "output_dir", "model_path", "dataset", "pgd",
            "eval_limit"};
  throw std::invalid_argument("config: unknown experiment \"" + experiment + "\"");
}

}  // namespace

Dataset DatasetSpec::load(std::uint64_t fallback_seed) const {
  const std::uint64_t s = seed.value_or(fallback_seed);
  if (source == "blobs") return load_synthetic_blobs(n_per_class, dim, classes, sep, s);
  if (source == "cifar10") return load_cifar10_binary(paths, subset, s);
  return make_gaussian_dataset(m, dim, c, s);
}

std::vector<double> GridSpec::values() const { return geomspace(start, stop, points); }

RateSchedule ExperimentConfig::schedule_for(int m) const {
  RateSchedule sched = RateSchedule::uniform(m, eta, horizon_S);
  for (const auto& [idx, fn] : eta_overrides) {
    if (idx < 0 || idx >= m)
      throw std::invalid_argument("config: eta override index out of range");
    sched.etas[static_cast<std::size_t>(idx)] = fn;
  }
  sched.validate();
  return sched;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  if (!j.contains("experiment"))
    throw std::invalid_argument("config: missing \"experiment\"");

  ExperimentConfig cfg;
  cfg.experiment = j.at("experiment").get<std::string>();
  bool known = false;
  for (const auto& k : allowed_experiments()) known = known || k == cfg.experiment;
  if (!known)
    throw std::invalid_argument("config: unknown experiment \"" + cfg.experiment + "\"");
  check_keys(j, "top level", top_level_keys(cfg.experiment));

  cfg.seed = j.value("seed", 0ull);
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.config_hash = fnv1a64(text.data(), text.size());

  if (j.contains("net")) cfg.net = parse_net(j.at("net"));
  if (j.contains("net_seed")) cfg.net_seed = j.at("net_seed").get<std::uint64_t>();
  if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"), "dataset");
  if (j.contains("test_dataset"))
    cfg.test_dataset = parse_dataset(j.at("test_dataset"), "test_dataset");
  if (j.contains("pgd")) cfg.pgd = parse_pgd(j.at("pgd"));

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    check_keys(s, "schedule", {"horizon_s", "eta", "eta_overrides"});
    cfg.horizon_S = s.value("horizon_s", 0.1);
    if (s.contains("eta")) cfg.eta = parse_eta(s.at("eta"), "schedule.eta");
    if (s.contains("eta_overrides")) {
      for (const auto& o : s.at("eta_overrides")) {
        if (!o.contains("index"))
          throw std::invalid_argument("config: eta override needs \"index\"");
        cfg.eta_overrides.emplace_back(o.at("index").get<int>(),
                                       parse_eta(o, "schedule.eta_overrides"));
      }
    }
  }

  if (j.contains("widths")) cfg.widths = j.at("widths").get<std::vector<int>>();
  cfg.seeds_per_width = j.value("seeds_per_width", 10);
  cfg.time_T = j.value("time_T", 1.0);
  cfg.dt = j.value("dt", 1e-3);
  cfg.inner_steps = j.value("inner_steps", 16);
  cfg.record_every = j.value("record_every", 0);
  cfg.quad_steps = j.value("quad_steps", 64);
  if (j.contains("t_grid")) {
    const json& g = j.at("t_grid");
    check_keys(g, "t_grid", {"start", "stop", "points"});
    cfg.t_grid.start = g.value("start", 0.1);
    cfg.t_grid.stop = g.value("stop", 1000.0);
    cfg.t_grid.points = g.value("points", 16);
  }
  cfg.iters = j.value("iters", 50);
  cfg.batch = j.value("batch", 32);
  cfg.lr = j.value("lr", 0.1);
  cfg.momentum = j.value("momentum", 0.9);
  cfg.weight_decay = j.value("weight_decay", 0.0);
  cfg.eval_every = j.value("eval_every", 0);
  cfg.probe_size = j.value("probe_size", 256);
  cfg.m_val = j.value("m_val", 0);
  cfg.eval_limit = j.value("eval_limit", 0);
  cfg.compare_ntk_baseline = j.value("compare_ntk_baseline", true);
  cfg.model_path = j.value("model_path", std::string());
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::system_error(ENOENT, std::generic_category(), "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

ReferenceInstance make_reference_instance(const ExperimentConfig& cfg) {
  ReferenceInstance ref;
  ref.data = cfg.dataset.load(cfg.seed * 1000 + 1);
  NetSpec spec = cfg.net;
  spec.input_dim = ref.data.d;
  spec.output_dim = ref.data.c;
  spec.validate();
  ref.params = mlp_init(spec, cfg.net_seed.value_or(cfg.seed * 1000 + 2));

  const Mat gram = empirical_ntk(ref.params, ref.data.xs);
  std::vector<Mat> ark = empirical_ark_diag(ref.params, ref.data.xs);
  const Mat f0 = mlp_forward_batch(ref.params, ref.data.xs);  // M x c
  Vec f0_flat(static_cast<Eigen::Index>(ref.data.m) * ref.data.c);
  for (int i = 0; i < ref.data.m; ++i)
    f0_flat.segment(static_cast<Eigen::Index>(i) * ref.data.c, ref.data.c) = f0.row(i);
  ref.state = LinearizedState::make(gram, std::move(ark), f0_flat, ref.data.ys);

  // Probe point from the same distribution, disjoint stream.
  Philox rng(cfg.seed * 1000 + 3, /*stream=*/0x9b0e);
  ref.x_probe.resize(ref.data.d);
  for (int k = 0; k < ref.data.d; ++k) ref.x_probe(k) = rng.gaussian();
  ref.f0_probe = mlp_forward(ref.params, ref.x_probe);

  // Empirical NTK rows between the probe and the training set.
  const int m = ref.data.m;
  const int c = ref.data.c;
  Mat joint(m + 1, ref.data.d);
  joint.topRows(m) = ref.data.xs;
  joint.row(m) = ref.x_probe.transpose();
  const Mat big = empirical_ntk(ref.params, joint);
  ref.ntk_cross =
      big.block(static_cast<Eigen::Index>(m) * c, 0, c, static_cast<Eigen::Index>(m) * c);
  return ref;
}

KernelCheckResult run_kernel_check(const ExperimentConfig& cfg) {
  const Dataset data = cfg.dataset.load(cfg.seed * 1000 + 1);
  NetSpec spec = cfg.net;
  spec.input_dim = data.d;
  if (spec.output_dim < 1) spec.output_dim = 1;
  if (cfg.widths.empty())
    throw std::invalid_argument("kernel-check: widths must be non-empty");

  const KernelGram analytic = ntk_gram(spec, data.xs);
  const Mat analytic_full = analytic.materialize();
  const Vec ark_analytic = ark_diag(spec, data.xs);
  const double ark_ref_norm =
      std::sqrt(static_cast<double>(spec.output_dim)) * ark_analytic.norm();

  KernelCheckResult res;
  res.widths = cfg.widths;
  for (int width : cfg.widths) {
    NetSpec wspec = spec;
    wspec.hidden_width = width;
    double ntk_sum = 0.0, ark_sum = 0.0;
    for (int s = 0; s < cfg.seeds_per_width; ++s) {
      const MlpParams p = mlp_init(wspec, cfg.seed * 1000 + 100 + s);
      const Mat emp = empirical_ntk(p, data.xs);
      ntk_sum += (emp - analytic_full).norm() / analytic_full.norm();
      const std::vector<Mat> ark_emp = empirical_ark_diag(p, data.xs);
      double err2 = 0.0;
      for (int i = 0; i < data.m; ++i)
        err2 += (ark_emp[i] -
                 ark_analytic(i) * Mat::Identity(wspec.output_dim, wspec.output_dim))
                    .squaredNorm();
      ark_sum += std::sqrt(err2) / ark_ref_norm;
    }
    res.ntk_err.push_back(ntk_sum / cfg.seeds_per_width);
    res.ark_err.push_back(ark_sum / cfg.seeds_per_width);
  }
  res.ntk_strictly_decreasing = res.ark_strictly_decreasing = true;
  for (std::size_t i = 1; i < res.ntk_err.size(); ++i) {
    res.ntk_strictly_decreasing =
        res.ntk_strictly_decreasing && res.ntk_err[i] < res.ntk_err[i - 1];
    res.ark_strictly_decreasing =
        res.ark_strictly_decreasing && res.ark_err[i] < res.ark_err[i - 1];
  }

  const std::string hash = hex64(cfg.config_hash);
  CsvWriter csv({"width", "ntk_rel_err", "ark_rel_err"}, hash);
  for (std::size_t i = 0; i < res.widths.size(); ++i)
    csv.row({static_cast<double>(res.widths[i]), res.ntk_err[i], res.ark_err[i]});
  csv.write(cfg.output_dir + "/kernel_check.csv");
  json summary = {{"widths", res.widths},
                  {"ntk_errors", res.ntk_err},
                  {"ark_errors", res.ark_err},
                  {"ntk_strictly_decreasing", res.ntk_strictly_decreasing},
                  {"ark_strictly_decreasing", res.ark_strictly_decreasing},
                  {"config_hash", hash}};
  atomic_write_file(cfg.output_dir + "/kernel_check.json", summary.dump(2) + "\n");
  return res;
}

namespace {

double closed_vs_ode(const ReferenceInstance& ref, const RateSchedule& sched,
                     const ExperimentConfig& cfg, double dt, int record_every) {
  OdeOracleConfig ocfg;
  ocfg.T = cfg.time_T;
  ocfg.dt = dt;
  ocfg.inner_steps = cfg.inner_steps;
  ocfg.record_every = record_every;
  const OdeOracleResult ode =
      ode_oracle_linearized(ref.state, sched, ref.ntk_cross, ref.f0_probe, ocfg);

  double max_diff = 0.0;
  for (std::size_t k = 0; k < ode.times.size(); ++k) {
    const XiMatrix xi = xi_matrix(ref.state, sched, ode.times[k], cfg.quad_steps);
    const Vec f_test = at_closed_form(ref.state, xi, ref.ntk_cross, ref.f0_probe);
    const Vec f_train =
        at_closed_form(ref.state, xi, ref.state.gram, ref.state.f0_train);
    max_diff = std::max(max_diff, (f_test - ode.f_test[k]).cwiseAbs().maxCoeff());
    max_diff = std::max(max_diff, (f_train - ode.f_train[k]).cwiseAbs().maxCoeff());
  }
  return max_diff;
}

}  // namespace

DynamicsCheckResult run_dynamics_check(const ExperimentConfig& cfg) {
  const ReferenceInstance ref = make_reference_instance(cfg);
  const RateSchedule sched = cfg.schedule_for(ref.data.m);
  const int rec = cfg.record_every > 0 ? cfg.record_every : 100;

  DynamicsCheckResult res;
  res.max_abs_diff = closed_vs_ode(ref, sched, cfg, cfg.dt, rec);
  res.max_abs_diff_half = closed_vs_ode(ref, sched, cfg, cfg.dt / 2.0, rec * 2);
  res.halving_ratio =
      res.max_abs_diff > 0.0 ? res.max_abs_diff_half / res.max_abs_diff : 0.0;

  const std::string hash = hex64(cfg.config_hash);
  CsvWriter csv({"dt", "max_abs_diff"}, hash);
  csv.row({cfg.dt, res.max_abs_diff});
  csv.row({cfg.dt / 2.0, res.max_abs_diff_half});
  csv.write(cfg.output_dir + "/dynamics_check.csv");
  json summary = {{"max_abs_diff", res.max_abs_diff},
                  {"max_abs_diff_half_dt", res.max_abs_diff_half},
                  {"halving_ratio", res.halving_ratio},
                  {"config_hash", hash}};
  atomic_write_file(cfg.output_dir + "/dynamics_check.json", summary.dump(2) + "\n");
  return res;
}

DegenerationResult run_degeneration(const ExperimentConfig& cfg) {
  const ReferenceInstance ref = make_reference_instance(cfg);
  const RateSchedule sched = cfg.schedule_for(ref.data.m);
  const std::vector<double> grid = cfg.t_grid.values();

  DegenerationResult res;
  res.report = degeneration_limit_check(ref.state, sched, grid, ref.ntk_cross,
                                        ref.f0_probe, cfg.quad_steps);
  const DegenerationDecomposition dec =
      degeneration_decompose(ref.state, sched, grid[grid.size() / 2], cfg.quad_steps);
  res.decompose_residual = dec.residual;
  res.final_norm = res.report.exp_norm.back();
  res.final_dist = res.report.dist_to_standard_limit.back();

  const std::string hash = hex64(cfg.config_hash);
  CsvWriter csv({"t", "exp_term_norm", "dist_to_standard_limit"}, hash);
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv.row({grid[i], res.report.exp_norm[i], res.report.dist_to_standard_limit[i]});
  csv.write(cfg.output_dir + "/degeneration.csv");
  json summary = {{"degenerate_regime", res.report.degenerate_regime},
                  {"lambda_min_H", res.report.lambda_min_H},
                  {"lambda_max_H", res.report.lambda_max_H},
                  {"final_norm", res.final_norm},
                  {"final_dist_to_standard_limit", res.final_dist},
                  {"decompose_residual", res.decompose_residual},
                  {"config_hash", hash}};
  atomic_write_file(cfg.output_dir + "/degeneration.json", summary.dump(2) + "\n");
  return res;
}

namespace {

Dataset eval_subset(const Dataset& full, int limit, std::uint64_t seed) {
  if (limit <= 0 || limit >= full.m) return full;
  std::vector<int> idx(full.m);
  for (int i = 0; i < full.m; ++i) idx[i] = i;
  Philox rng(seed, /*stream=*/0xe7a1);
  for (int i = 0; i < limit; ++i) {
    const int j =
        i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(full.m - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  return full.subset(idx);
}

}  // namespace

AdvNtkExperimentResult run_train_advntk(const ExperimentConfig& cfg) {
  const Dataset data = cfg.dataset.load(cfg.seed * 1000 + 1);
  if (cfg.m_val < 1) throw std::invalid_argument("train-advntk: m_val must be set");
  const SplitPlan plan = SplitPlan::make(data.m, cfg.m_val, cfg.seed * 1000 + 2);

  AdvNtkTrainConfig tc;
  tc.net = cfg.net;
  tc.pgd = cfg.pgd;
  tc.iters = cfg.iters;
  tc.lr = cfg.lr;
  tc.batch = cfg.batch;
  tc.seed = cfg.seed * 1000 + 3;
  AdvNtkTrainResult trained = advntk_train(data, plan, tc);

  AdvNtkExperimentResult res;
  res.robust_val_loss = trained.robust_val_loss;
  res.model_path = cfg.output_dir + "/advntk_model.json";
  save_advntk_model(trained.model, res.model_path);

  const std::string hash = hex64(cfg.config_hash);
  CsvWriter csv({"iteration", "robust_val_loss"}, hash);
  for (const auto& [it, loss] : trained.robust_val_loss)
    csv.row({static_cast<double>(it), loss});
  csv.write(cfg.output_dir + "/advntk_metrics.csv");

  json summary = {{"config_hash", hash}, {"model_path", res.model_path}};
  if (cfg.test_dataset) {
    const Dataset test = eval_subset(cfg.test_dataset->load(cfg.seed * 1000 + 4),
                                     cfg.eval_limit, cfg.seed * 1000 + 5);
    const AccuracyPair adv =
        eval_robust_accuracy(advntk_robust_model(trained.model), test, cfg.pgd);
    res.advntk_clean = adv.clean_acc;
    res.advntk_robust = adv.robust_acc;
    summary["advntk_clean_acc"] = adv.clean_acc;
    summary["advntk_robust_acc"] = adv.robust_acc;
    if (cfg.compare_ntk_baseline) {
      NetSpec spec = cfg.net;
      spec.input_dim = data.d;
      spec.output_dim = data.c;
      const KernelRegressor ntk = make_ntk_regressor(spec, data.xs, data.ys);
      const AccuracyPair base =
          eval_robust_accuracy(regressor_robust_model(ntk), test, cfg.pgd);
      res.ntk_clean = base.clean_acc;
      res.ntk_robust = base.robust_acc;
      summary["ntk_clean_acc"] = base.clean_acc;
      summary["ntk_robust_acc"] = base.robust_acc;
    }
  }
  atomic_write_file(cfg.output_dir + "/advntk_summary.json", summary.dump(2) + "\n");
  return res;
}

TrainAtResult run_train_at(const ExperimentConfig& cfg) {
  Dataset train = cfg.dataset.load(cfg.seed * 1000 + 1);
  Dataset probe;
  if (cfg.test_dataset) {
    probe = eval_subset(cfg.test_dataset->load(cfg.seed * 1000 + 4), cfg.probe_size,
                        cfg.seed * 1000 + 5);
  } else {
    // Hold the probe out of the training set.
    if (train.m <= cfg.probe_size)
      throw std::invalid_argument("train-at: dataset too small to hold out a probe set");
    std::vector<int> idx(train.m);
    for (int i = 0; i < train.m; ++i) idx[i] = i;
    Philox rng(cfg.seed * 1000 + 5, /*stream=*/0x9076);
    for (int i = train.m - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[i], idx[j]);
    }
    probe = train.subset({idx.begin(), idx.begin() + cfg.probe_size});
    train = train.subset({idx.begin() + cfg.probe_size, idx.end()});
  }

  NetSpec spec = cfg.net;
  spec.input_dim = train.d;
  spec.output_dim = train.c;
  spec.validate();
  const MlpParams p0 = mlp_init(spec, cfg.net_seed.value_or(cfg.seed * 1000 + 2));

  SgdAtConfig sc;
  sc.iters = cfg.iters;
  sc.batch = cfg.batch;
  sc.lr = cfg.lr;
  sc.momentum = cfg.momentum;
  sc.weight_decay = cfg.weight_decay;
  sc.eval_every = cfg.eval_every > 0 ? cfg.eval_every : std::max(1, cfg.iters / 10);
  sc.seed = cfg.seed * 1000 + 3;
  sc.pgd = cfg.pgd;
  const SgdAtResult trained = sgd_at_train(p0, train, probe, sc);

  const std::string hash = hex64(cfg.config_hash);
  CsvWriter csv({"iteration", "clean_acc", "robust_acc", "loss"}, hash);
  for (const auto& row : trained.log)
    csv.row({static_cast<double>(row.iteration), row.clean_acc, row.robust_acc, row.loss});
  csv.write(cfg.output_dir + "/at_metrics.csv");

  json summary = {
      {"config_hash", hash},
      {"iterations", cfg.iters},
      {"final_clean_acc", trained.log.empty() ? 0.0 : trained.log.back().clean_acc},
      {"final_robust_acc", trained.log.empty() ? 0.0 : trained.log.back().robust_acc}};
  atomic_write_file(cfg.output_dir + "/at_summary.json", summary.dump(2) + "\n");

  TrainAtResult res;
  res.log = trained.log;
  return res;
}

EvalResult run_eval(const ExperimentConfig& cfg) {
  if (cfg.model_path.empty()) throw std::invalid_argument("eval: model_path must be set");
  const AdvNtkModel model = load_advntk_model(cfg.model_path);
  const Dataset test = eval_subset(cfg.dataset.load(cfg.seed * 1000 + 4), cfg.eval_limit,
                                   cfg.seed * 1000 + 5);
  const AccuracyPair acc = eval_robust_accuracy(advntk_robust_model(model), test, cfg.pgd);

  const std::string hash = hex64(cfg.config_hash);
  json summary = {{"clean_acc", acc.clean_acc},
                  {"robust_acc", acc.robust_acc},
                  {"model_path", cfg.model_path},
                  {"config_hash", hash}};
  atomic_write_file(cfg.output_dir + "/eval.json", summary.dump(2) + "\n");
  return {acc.clean_acc, acc.robust_acc};
}

}  // namespace advntk
