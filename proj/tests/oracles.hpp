// Test-only reference computations. Nothing here calls back into the tape.
#ifndef INNERATT_TESTS_ORACLES_HPP_
#define INNERATT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "inneratt/nn/ndarray.hpp"
#include "inneratt/nn/random.hpp"

namespace oracle {

using inneratt::nn::NdArray;

inline double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-3, std::abs(a), std::abs(b)});
}

// Central differences of f with respect to every entry of *param.
inline NdArray central_difference(NdArray* param, const std::function<double()>& f,
                                  double h = 1e-5) {
  NdArray grad(param->shape());
  for (std::size_t i = 0; i < param->size(); ++i) {
    const double saved = (*param)[i];
    (*param)[i] = saved + h;
    const double up = f();
    (*param)[i] = saved - h;
    const double down = f();
    (*param)[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

inline double max_rel_error(const NdArray& a, const NdArray& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_error(a[i], b[i]));
  return worst;
}

inline NdArray random_array(inneratt::nn::Shape shape, inneratt::Rng& rng,
                            double lo = -1.0, double hi = 1.0) {
  NdArray a(std::move(shape));
  for (double& v : a.data()) v = rng.uniform(lo, hi);
  return a;
}

}  // namespace oracle

#endif  // INNERATT_TESTS_ORACLES_HPP_
