#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "deepmatch/rng.hpp"
#include "deepmatch/tensor.hpp"

namespace deepmatch::testing {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, Rng& rng,
                             double scale = 1.0) {
  Tensor2 t(rows, cols);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

/// Central finite difference d f / d x at the current value of x.
inline double finite_difference(double& x, const std::function<double()>& f,
                                double h = 1e-5) {
  const double saved = x;
  x = saved + h;
  const double plus = f();
  x = saved - h;
  const double minus = f();
  x = saved;
  return (plus - minus) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-6) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

}  // namespace deepmatch::testing
