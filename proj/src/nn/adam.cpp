#include "inneratt/nn/adam.hpp"

#include <cmath>
#include <string>

#include "inneratt/nn/errors.hpp"

namespace inneratt::nn {

AdamState AdamState::zeros_like(const ConstParamList& params) {
  AdamState state;
  for (const auto& p : params) {
    state.first.emplace_back(p.array->shape());
    state.second.emplace_back(p.array->shape());
  }
  return state;
}

void adam_step(const ParamList& params, const std::vector<NdArray>& grads,
               AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.first.size() != params.size() ||
      state.second.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) +
                         " params, " + std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.first.size()) + " moments");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    require_same_shape(*params[k].array, grads[k], "adam_step");
    require_same_shape(*params[k].array, state.first[k], "adam_step");
    require_same_shape(*params[k].array, state.second[k], "adam_step");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].array->data();
    auto g = grads[k].data();
    auto m = state.first[k].data();
    auto v = state.second[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void adam_step(NdArray& param, const NdArray& grad, AdamState& state,
               const AdamConfig& config) {
  if (state.first.empty()) {
    state.first.emplace_back(param.shape());
    state.second.emplace_back(param.shape());
  }
  adam_step(ParamList{{"param", &param}}, {grad}, state, config);
}

}  // namespace inneratt::nn
