#ifndef INNERATT_NN_ADAM_HPP_
#define INNERATT_NN_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "inneratt/nn/ndarray.hpp"
#include "inneratt/nn/params.hpp"

namespace inneratt::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators for a list of parameters, in list order.
struct AdamState {
  std::vector<NdArray> first;
  std::vector<NdArray> second;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ConstParamList& params);
  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update of every parameter. Increments state.step.
void adam_step(const ParamList& params, const std::vector<NdArray>& grads,
               AdamState& state, const AdamConfig& config);

// Single-array convenience form.
void adam_step(NdArray& param, const NdArray& grad, AdamState& state,
               const AdamConfig& config);

}  // namespace inneratt::nn

#endif  // INNERATT_NN_ADAM_HPP_
