#include "inneratt/nn/params.hpp"

#include <cmath>

namespace inneratt::nn {

NdArray uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  NdArray a(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : a.data()) v = rng.uniform(-bound, bound);
  return a;
}

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng) {
  Linear layer;
  layer.weight = uniform_init({in, out}, in, rng);
  layer.bias = uniform_init({out}, in, rng);
  return layer;
}

Linear Linear::zeros(std::size_t in, std::size_t out) {
  return Linear{NdArray({in, out}), NdArray({out})};
}

std::size_t parameter_count(const ConstParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.array->size();
  return n;
}

}  // namespace inneratt::nn
