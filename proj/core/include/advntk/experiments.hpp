#pragma once

#include "advntk/advntk_model.hpp"
#include "advntk/attacks.hpp"
#include "advntk/dataset.hpp"
#include "advntk/dynamics.hpp"
#include "advntk/mlp.hpp"
#include "advntk/schedule.hpp"
#include "advntk/sgd_at.hpp"
#include "advntk/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace advntk {

/// Where a dataset comes from. "blobs", "cifar10", or "gaussian".
struct DatasetSpec {
  std::string source = "gaussian";
  // blobs
  int n_per_class = 100;
  int dim = 4;
  int classes = 2;
  double sep = 6.0;
  // cifar10
  std::vector<std::string> paths;
  int subset = 0;
  // gaussian
  int m = 8;
  int c = 1;
  std::optional<std::uint64_t> seed;  // defaults derive from the run seed

  Dataset load(std::uint64_t fallback_seed) const;
};

struct GridSpec {
  double start = 0.1;
  double stop = 1000.0;
  int points = 16;
  std::vector<double> values() const;  // geometric
};

/// One experiment per config file; unknown keys anywhere are rejected.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::uint64_t config_hash = 0;  // FNV-1a of the raw config bytes

  NetSpec net;
  std::optional<std::uint64_t> net_seed;
  DatasetSpec dataset;
  std::optional<DatasetSpec> test_dataset;
  PgdConfig pgd;

  // schedule (expanded to per-sample rates when the dataset size is known)
  double horizon_S = 0.1;
  RateFn eta = RateFn::constant(0.0);
  std::vector<std::pair<int, RateFn>> eta_overrides;

  // experiment-specific knobs
  std::vector<int> widths;
  int seeds_per_width = 10;
  double time_T = 1.0;
  double dt = 1e-3;
  int inner_steps = 16;
  int record_every = 0;
  int quad_steps = 64;
  GridSpec t_grid;
  int iters = 50;
  int batch = 32;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int eval_every = 0;
  int probe_size = 256;
  int m_val = 0;
  int eval_limit = 0;  // cap on evaluation points, 0 = all
  bool compare_ntk_baseline = true;
  std::string model_path;

  RateSchedule schedule_for(int m) const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// The reference linearized instance shared by the dynamics experiments:
/// a finite net (net_seed) on the configured dataset, with its empirical
/// NTK/ARK at initialization and one held-out probe point.
struct ReferenceInstance {
  MlpParams params;
  Dataset data;
  LinearizedState state;
  Vec x_probe;
  Vec f0_probe;
  Mat ntk_cross;  // c x Mc empirical NTK rows at the probe point
};
ReferenceInstance make_reference_instance(const ExperimentConfig& cfg);

struct KernelCheckResult {
  std::vector<int> widths;
  std::vector<double> ntk_err;  // mean relative Frobenius error over seeds
  std::vector<double> ark_err;
  bool ntk_strictly_decreasing = false;
  bool ark_strictly_decreasing = false;
};
KernelCheckResult run_kernel_check(const ExperimentConfig& cfg);

struct DynamicsCheckResult {
  double max_abs_diff = 0.0;       // closed form vs ODE oracle at dt
  double max_abs_diff_half = 0.0;  // same at dt/2
  double halving_ratio = 0.0;
};
DynamicsCheckResult run_dynamics_check(const ExperimentConfig& cfg);

struct DegenerationResult {
  DegenerationReport report;
  double decompose_residual = 0.0;  // dual-route agreement at mid grid
  double final_norm = 0.0;
  double final_dist = 0.0;
};
DegenerationResult run_degeneration(const ExperimentConfig& cfg);

struct AdvNtkExperimentResult {
  double advntk_clean = 0.0;
  double advntk_robust = 0.0;
  double ntk_clean = 0.0;
  double ntk_robust = 0.0;
  std::vector<std::pair<int, double>> robust_val_loss;
  std::string model_path;
};
AdvNtkExperimentResult run_train_advntk(const ExperimentConfig& cfg);

struct TrainAtResult {
  std::vector<MetricRow> log;
};
TrainAtResult run_train_at(const ExperimentConfig& cfg);

struct EvalResult {
  double clean_acc = 0.0;
  double robust_acc = 0.0;
};
EvalResult run_eval(const ExperimentConfig& cfg);

/// CLI entry point (subcommands kernel-check, dynamics-check, degeneration,
/// train-advntk, train-at, eval). Returns the exit code: 0 success, 2 for a
/// missing/unreadable config, 1 otherwise, with a JSON error on stderr.
int run_cli(int argc, const char* const* argv);

}  // namespace advntk
