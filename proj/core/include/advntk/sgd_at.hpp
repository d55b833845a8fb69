#pragma once

#include "advntk/attacks.hpp"
#include "advntk/dataset.hpp"
#include "advntk/mlp.hpp"

#include <cstdint>
#include <vector>

namespace advntk {

struct SgdAtConfig {
  int iters = 1000;
  int batch = 64;
  double lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int eval_every = 100;  // metric-log cadence on the probe set
  std::uint64_t seed = 0;
  PgdConfig pgd;
};

struct MetricRow {
  int iteration = 0;
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  double loss = 0.0;
};

struct SgdAtResult {
  MlpParams params;
  std::vector<MetricRow> log;
};

/// Minibatch adversarial training: per iteration, PGD on the batch against
/// the current net (squared loss), then one SGD-with-momentum step on the
/// batch-mean squared loss. Probe metrics use the same PGD configuration.
SgdAtResult sgd_at_train(const MlpParams& p0, const Dataset& train,
                         const Dataset& probe, const SgdAtConfig& cfg);

/// RobustModel view of a finite net (argmax prediction, squared-loss input
/// gradient); used for probe metrics and the eval CLI.
RobustModel mlp_robust_model(const MlpParams& p);

}  // namespace advntk
