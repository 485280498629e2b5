#include "inneratt/nn/ndarray.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "inneratt/nn/errors.hpp"

namespace inneratt::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

NdArray::NdArray(Shape shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

NdArray::NdArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw DimensionError("data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
  }
}

NdArray NdArray::matrix(std::size_t rows, std::size_t cols,
                        std::initializer_list<double> values) {
  return NdArray({rows, cols}, std::vector<double>(values));
}

NdArray NdArray::vector(std::initializer_list<double> values) {
  return NdArray({values.size()}, std::vector<double>(values));
}

NdArray NdArray::scalar(double value) { return NdArray({1}, {value}); }

bool NdArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double NdArray::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void NdArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void require_same_shape(const NdArray& a, const NdArray& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

}  // namespace inneratt::nn
