#pragma once

#include "advntk/common.hpp"
#include "advntk/rng.hpp"

#include <cmath>
#include <functional>

namespace advntk::testutil {

inline Vec random_vec(Philox& rng, int d, double scale = 1.0) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * rng.gaussian();
  return v;
}

inline Vec random_unit(Philox& rng, int d) {
  Vec v = random_vec(rng, d);
  return v / v.norm();
}

inline Mat random_mat(Philox& rng, int rows, int cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.gaussian();
  return m;
}

/// Central finite-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-5) {
  Vec g(x.size());
  Vec xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double keep = xp(i);
    xp(i) = keep + h;
    const double up = f(xp);
    xp(i) = keep - h;
    const double dn = f(xp);
    xp(i) = keep;
    g(i) = (up - dn) / (2.0 * h);
  }
  return g;
}

inline double rel_err(const Vec& got, const Vec& want) {
  const double denom = want.norm();
  return denom > 0.0 ? (got - want).norm() / denom : (got - want).norm();
}

inline double rel_err(double got, double want) {
  const double denom = std::abs(want);
  return denom > 0.0 ? std::abs(got - want) / denom : std::abs(got - want);
}

/// Running mean / standard error accumulator for Monte-Carlo oracles.
struct McStat {
  double sum = 0.0, sumsq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / n; }
  double stderror() const {
    const double var = (sumsq - sum * sum / n) / (n - 1);
    return std::sqrt(var / n);
  }
};

}  // namespace advntk::testutil
