#ifndef INNERATT_NN_PARAMS_HPP_
#define INNERATT_NN_PARAMS_HPP_

#include <string>
#include <vector>

#include "inneratt/nn/ndarray.hpp"
#include "inneratt/nn/random.hpp"

namespace inneratt::nn {

struct NamedArray {
  std::string name;
  NdArray* array;
};

struct ConstNamedArray {
  std::string name;
  const NdArray* array;
};

using ParamList = std::vector<NamedArray>;
using ConstParamList = std::vector<ConstNamedArray>;

// Weight matrix stored in x out so that a layer is x * weight + bias.
struct Linear {
  NdArray weight;
  NdArray bias;

  // Uniform in [-1/sqrt(in), 1/sqrt(in)] for weights and biases.
  static Linear init(std::size_t in, std::size_t out, Rng& rng);
  static Linear zeros(std::size_t in, std::size_t out);

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
  bool operator==(const Linear&) const = default;
};

NdArray uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

std::size_t parameter_count(const ConstParamList& params);

}  // namespace inneratt::nn

#endif  // INNERATT_NN_PARAMS_HPP_
