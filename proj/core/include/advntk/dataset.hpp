#pragma once

#include "advntk/attacks.hpp"
#include "advntk/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace advntk {

/// Inputs x in R^{M x d} (row per sample) and concatenated regression targets
/// y in R^{M*c}. Classification sources store one-hot blocks.
struct Dataset {
  Mat xs;
  Vec ys;
  int m = 0;
  int d = 0;
  int c = 1;
  std::string name;
  std::string normalization = "none";

  Vec target(int i) const { return ys.segment(static_cast<Eigen::Index>(i) * c, c); }
  int label(int i) const;  // argmax of the one-hot block
  void validate() const;

  /// Sub-dataset from row indices (targets follow).
  Dataset subset(const std::vector<int>& indices) const;
};

/// Gaussian blobs, unit isotropic noise, class means sep apart pairwise
/// (placed on scaled coordinate axes; requires d >= classes). One-hot
/// targets. Deterministic in seed.
Dataset load_synthetic_blobs(int n_per_class, int d, int classes, double sep,
                             std::uint64_t seed);

/// CIFAR-10 "binary version" reader: records of 1 label byte + 3072 pixel
/// bytes. Pixels scale to [0,1]; targets are one-hot over 10 classes. Draws
/// a seeded subset of subset_m records without replacement across all files
/// (subset_m <= 0 keeps everything). SVHN is supported only through files
/// pre-converted to this exact record layout.
Dataset load_cifar10_binary(const std::vector<std::string>& paths, int subset_m,
                            std::uint64_t seed);

/// Unlabeled-score model interface for robust evaluation: prediction is the
/// argmax over the c outputs, attacks follow the squared-loss gradient.
struct RobustModel {
  std::function<Vec(const Vec&)> predict;
  std::function<Vec(const Vec&, const Vec&)> loss_grad_x;
};

struct AccuracyPair {
  double clean_acc = 0.0;
  double robust_acc = 0.0;
};

/// Clean and PGD-robust accuracy of the model on data. With rho = 0 the
/// two numbers are identical by construction.
AccuracyPair eval_robust_accuracy(const RobustModel& model, const Dataset& data,
                                  const PgdConfig& pgd);

/// Plain Gaussian regression instance used by the dynamics reference
/// configurations: x ~ N(0, I), targets Rademacher +-1 per output.
Dataset make_gaussian_dataset(int m, int d, int c, std::uint64_t seed);

}  // namespace advntk
