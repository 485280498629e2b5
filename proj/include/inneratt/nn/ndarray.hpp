#ifndef INNERATT_NN_NDARRAY_HPP_
#define INNERATT_NN_NDARRAY_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace inneratt::nn {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Only 1-D and 2-D shapes are used by the
// networks; a 1-D array of length n behaves as a 1 x n matrix.
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(Shape shape, double fill = 0.0);
  NdArray(Shape shape, std::vector<double> data);

  static NdArray matrix(std::size_t rows, std::size_t cols,
                        std::initializer_list<double> values);
  static NdArray vector(std::initializer_list<double> values);
  static NdArray scalar(double value);

  const Shape& shape() const { return shape_; }
  std::size_t ndim() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const {
    if (shape_.size() == 2) return shape_[0];
    return shape_.empty() ? 0 : 1;
  }
  std::size_t cols() const {
    if (shape_.size() == 2) return shape_[1];
    return shape_.empty() ? 0 : shape_[0];
  }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  double max_abs() const;
  void fill(double value);

  bool operator==(const NdArray& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const NdArray& a, const NdArray& b, const char* op);

}  // namespace inneratt::nn

#endif  // INNERATT_NN_NDARRAY_HPP_
