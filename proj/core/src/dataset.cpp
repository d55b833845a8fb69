#include "advntk/dataset.hpp"

#include "advntk/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace advntk {
namespace {

constexpr int kCifarRecordBytes = 3073;  // 1 label byte + 32*32*3 pixels
constexpr int kCifarPixels = 3072;
constexpr int kCifarClasses = 10;

/// Seeded Fisher-Yates prefix: first `take` entries of a random permutation.
std::vector<int> sample_without_replacement(int n, int take, std::uint64_t seed) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Philox rng(seed, /*stream=*/0x5eed);
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace

int Dataset::label(int i) const {
  int best = 0;
  const Vec t = target(i);
  t.maxCoeff(&best);
  return best;
}

void Dataset::validate() const {
  if (xs.rows() != m || xs.cols() != d)
    throw std::invalid_argument("Dataset: xs shape mismatch");
  if (ys.size() != static_cast<Eigen::Index>(m) * c)
    throw std::invalid_argument("Dataset: ys length mismatch");
  if (!xs.allFinite() || !ys.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.m = static_cast<int>(indices.size());
  out.d = d;
  out.c = c;
  out.name = name;
  out.normalization = normalization;
  out.xs.resize(out.m, d);
  out.ys.resize(static_cast<Eigen::Index>(out.m) * c);
  for (int i = 0; i < out.m; ++i) {
    out.xs.row(i) = xs.row(indices[i]);
    out.ys.segment(static_cast<Eigen::Index>(i) * c, c) = target(indices[i]);
  }
  return out;
}

Dataset load_synthetic_blobs(int n_per_class, int d, int classes, double sep,
                             std::uint64_t seed) {
  if (n_per_class < 1 || classes < 2)
    throw std::invalid_argument("blobs: need n_per_class >= 1 and classes >= 2");
  if (d < classes)
    throw std::invalid_argument("blobs: need d >= classes for axis-aligned means");
  Dataset ds;
  ds.m = n_per_class * classes;
  ds.d = d;
  ds.c = classes;
  char tag[96];
  std::snprintf(tag, sizeof(tag), "blobs(n=%d,d=%d,k=%d,sep=%g)", n_per_class, d,
                classes, sep);
  ds.name = tag;
  ds.xs.resize(ds.m, d);
  ds.ys = Vec::Zero(static_cast<Eigen::Index>(ds.m) * classes);

  // Means sep/sqrt(2) along distinct axes give exact pairwise distance sep.
  const double r = sep / std::sqrt(2.0);
  Philox rng(seed, /*stream=*/0xb10b);
  int row = 0;
  for (int cls = 0; cls < classes; ++cls) {
    for (int i = 0; i < n_per_class; ++i, ++row) {
      for (int j = 0; j < d; ++j) ds.xs(row, j) = rng.gaussian();
      ds.xs(row, cls) += r;
      ds.ys(static_cast<Eigen::Index>(row) * classes + cls) = 1.0;
    }
  }
  return ds;
}

Dataset load_cifar10_binary(const std::vector<std::string>& paths, int subset_m,
                            std::uint64_t seed) {
  if (paths.empty()) throw std::invalid_argument("cifar10: no input files");
  std::vector<unsigned char> records;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("cifar10: cannot open " + path);
    const std::streamoff size = in.tellg();
    if (size <= 0 || size % kCifarRecordBytes != 0) {
      throw std::runtime_error(
          "cifar10: bad file length " + std::to_string(size) + " for " + path +
          " (not a multiple of 3073; trailing " +
          std::to_string(size % kCifarRecordBytes) + " bytes at offset " +
          std::to_string(size - size % kCifarRecordBytes) + ")");
    }
    const std::size_t old = records.size();
    records.resize(old + static_cast<std::size_t>(size));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(records.data() + old), size);
    if (!in) throw std::runtime_error("cifar10: short read on " + path);
  }

  const int total = static_cast<int>(records.size() / kCifarRecordBytes);
  for (int r = 0; r < total; ++r) {
    const unsigned char label = records[static_cast<std::size_t>(r) * kCifarRecordBytes];
    if (label >= kCifarClasses)
      throw std::runtime_error("cifar10: invalid label byte " + std::to_string(label) +
                               " at offset " +
                               std::to_string(static_cast<long long>(r) * kCifarRecordBytes));
  }

  std::vector<int> chosen;
  if (subset_m > 0 && subset_m < total) {
    chosen = sample_without_replacement(total, subset_m, seed);
    std::sort(chosen.begin(), chosen.end());
  } else {
    chosen.resize(total);
    for (int i = 0; i < total; ++i) chosen[i] = i;
  }

  Dataset ds;
  ds.m = static_cast<int>(chosen.size());
  ds.d = kCifarPixels;
  ds.c = kCifarClasses;
  ds.name = "cifar10-binary";
  ds.normalization = "pixels/255";
  ds.xs.resize(ds.m, kCifarPixels);
  ds.ys = Vec::Zero(static_cast<Eigen::Index>(ds.m) * kCifarClasses);
  for (int i = 0; i < ds.m; ++i) {
    const unsigned char* rec =
        records.data() + static_cast<std::size_t>(chosen[i]) * kCifarRecordBytes;
    ds.ys(static_cast<Eigen::Index>(i) * kCifarClasses + rec[0]) = 1.0;
    for (int j = 0; j < kCifarPixels; ++j)
      ds.xs(i, j) = static_cast<double>(rec[1 + j]) / 255.0;
  }
  return ds;
}

AccuracyPair eval_robust_accuracy(const RobustModel& model, const Dataset& data,
                                  const PgdConfig& pgd) {
  pgd.validate();
  data.validate();
  std::vector<int> clean_ok(data.m, 0), robust_ok(data.m, 0);
  parallel_for(data.m, [&](int i) {
    const Vec x = data.xs.row(i).transpose();
    const Vec y = data.target(i);
    int truth = data.label(i);
    int pred = 0;
    model.predict(x).maxCoeff(&pred);
    clean_ok[i] = pred == truth ? 1 : 0;
    if (pgd.rho == 0.0) {
      robust_ok[i] = clean_ok[i];
      return;
    }
    const Vec xadv = pgd_linf(x, y, model.loss_grad_x, pgd);
    int predadv = 0;
    model.predict(xadv).maxCoeff(&predadv);
    robust_ok[i] = predadv == truth ? 1 : 0;
  });
  AccuracyPair acc;
  for (int i = 0; i < data.m; ++i) {
    acc.clean_acc += clean_ok[i];
    acc.robust_acc += robust_ok[i];
  }
  acc.clean_acc /= data.m;
  acc.robust_acc /= data.m;
  return acc;
}

Dataset make_gaussian_dataset(int m, int d, int c, std::uint64_t seed) {
  Dataset ds;
  ds.m = m;
  ds.d = d;
  ds.c = c;
  ds.name = "gaussian";
  ds.xs.resize(m, d);
  ds.ys.resize(static_cast<Eigen::Index>(m) * c);
  Philox rng(seed, /*stream=*/0xda7a);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) ds.xs(i, j) = rng.gaussian();
  for (Eigen::Index i = 0; i < ds.ys.size(); ++i)
    ds.ys(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return ds;
}

}  // namespace advntk
