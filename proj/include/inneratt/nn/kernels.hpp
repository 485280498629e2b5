#ifndef INNERATT_NN_KERNELS_HPP_
#define INNERATT_NN_KERNELS_HPP_

#include <cstddef>
#include <span>

// Dense kernels used by the tape. Each kernel has a plain serial version in
// `serial` that is kept as the test reference, and a production version that
// splits rows across OpenMP threads.
namespace inneratt::nn::kernels {

struct ConstMatrixView {
  const double* data;
  std::size_t rows;
  std::size_t cols;
};

struct MatrixView {
  double* data;
  std::size_t rows;
  std::size_t cols;
};

enum class Transpose { kNo, kYes };

// c = op(a) * op(b) (+ c when accumulate). Shapes are validated by callers.
void gemm(ConstMatrixView a, Transpose trans_a, ConstMatrixView b,
          Transpose trans_b, MatrixView c, bool accumulate);

// Numerically safe row-wise softmax; out may alias in.
void softmax_rows(ConstMatrixView in, MatrixView out);
void log_softmax_rows(ConstMatrixView in, MatrixView out);

void relu(std::span<const double> in, std::span<double> out);

// out[r] = sum_c a[r, c] * b[r, c]
void row_dot(ConstMatrixView a, ConstMatrixView b, std::span<double> out);

// Number of OpenMP threads the parallel kernels will use.
int max_threads();

namespace serial {

void gemm(ConstMatrixView a, Transpose trans_a, ConstMatrixView b,
          Transpose trans_b, MatrixView c, bool accumulate);
void softmax_rows(ConstMatrixView in, MatrixView out);
void log_softmax_rows(ConstMatrixView in, MatrixView out);
void relu(std::span<const double> in, std::span<double> out);
void row_dot(ConstMatrixView a, ConstMatrixView b, std::span<double> out);

}  // namespace serial

}  // namespace inneratt::nn::kernels

#endif  // INNERATT_NN_KERNELS_HPP_
