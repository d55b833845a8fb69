#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace advntk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency, capped by the ADVNTK_THREADS environment variable when set.
int worker_threads();

/// Runs fn(i) for i in [0, n). Work items must write to disjoint outputs;
/// results are then identical for any thread count.
void parallel_for(int n, const std::function<void(int)>& fn);

/// FNV-1a 64-bit hash, used for config provenance and Gram checksums.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string hex64(std::uint64_t v);

/// Geometric grid with `points` entries from `start` to `stop` inclusive.
std::vector<double> geomspace(double start, double stop, int points);

/// Uniform grid from `start` to `stop` inclusive.
std::vector<double> linspace(double start, double stop, int points);

}  // namespace advntk
