#include "inneratt/nn/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace inneratt::nn::kernels {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

// Below this many rows the thread fork costs more than it saves.
constexpr std::size_t kParallelRows = 256;

double row_max(const double* row, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) m = std::max(m, row[c]);
  return m;
}

void softmax_row(const double* in, double* out, std::size_t n) {
  const double m = row_max(in, n);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    out[c] = std::exp(in[c] - m);
    total += out[c];
  }
  for (std::size_t c = 0; c < n; ++c) out[c] /= total;
}

void log_softmax_row(const double* in, double* out, std::size_t n) {
  const double m = row_max(in, n);
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) total += std::exp(in[c] - m);
  const double log_total = m + std::log(total);
  for (std::size_t c = 0; c < n; ++c) out[c] = in[c] - log_total;
}

// Eigen product over a contiguous block of output rows.
void gemm_block(ConstMatrixView a, Transpose trans_a, ConstMatrixView b,
                Transpose trans_b, MatrixView c, bool accumulate,
                std::size_t row_begin, std::size_t row_end) {
  const auto rows = static_cast<Eigen::Index>(row_end - row_begin);
  if (rows == 0) return;
  ConstMap am(a.data, static_cast<Eigen::Index>(a.rows),
              static_cast<Eigen::Index>(a.cols));
  ConstMap bm(b.data, static_cast<Eigen::Index>(b.rows),
              static_cast<Eigen::Index>(b.cols));
  Map cm(c.data + row_begin * c.cols, rows, static_cast<Eigen::Index>(c.cols));
  const auto r0 = static_cast<Eigen::Index>(row_begin);
  auto product = [&](const auto& lhs) {
    if (trans_b == Transpose::kYes) {
      if (accumulate) {
        cm.noalias() += lhs * bm.transpose();
      } else {
        cm.noalias() = lhs * bm.transpose();
      }
    } else {
      if (accumulate) {
        cm.noalias() += lhs * bm;
      } else {
        cm.noalias() = lhs * bm;
      }
    }
  };
  if (trans_a == Transpose::kYes) {
    product(am.transpose().middleRows(r0, rows));
  } else {
    product(am.middleRows(r0, rows));
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm(ConstMatrixView a, Transpose trans_a, ConstMatrixView b,
          Transpose trans_b, MatrixView c, bool accumulate) {
  const int threads = max_threads();
  if (threads <= 1 || c.rows < kParallelRows) {
    gemm_block(a, trans_a, b, trans_b, c, accumulate, 0, c.rows);
    return;
  }
  const std::size_t chunk = (c.rows + threads - 1) / threads;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(c.rows, chunk * t);
    const std::size_t end = std::min(c.rows, begin + chunk);
    gemm_block(a, trans_a, b, trans_b, c, accumulate, begin, end);
  }
}

void softmax_rows(ConstMatrixView in, MatrixView out) {
  const auto rows = static_cast<std::ptrdiff_t>(in.rows);
#pragma omp parallel for schedule(static) if (in.rows >= kParallelRows)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    softmax_row(in.data + r * in.cols, out.data + r * out.cols, in.cols);
  }
}

void log_softmax_rows(ConstMatrixView in, MatrixView out) {
  const auto rows = static_cast<std::ptrdiff_t>(in.rows);
#pragma omp parallel for schedule(static) if (in.rows >= kParallelRows)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    log_softmax_row(in.data + r * in.cols, out.data + r * out.cols, in.cols);
  }
}

void relu(std::span<const double> in, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for simd schedule(static) if (in.size() >= 65536)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void row_dot(ConstMatrixView a, ConstMatrixView b, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static) if (a.rows >= kParallelRows)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const double* x = a.data + r * a.cols;
    const double* y = b.data + r * b.cols;
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) s += x[c] * y[c];
    out[r] = s;
  }
}

namespace serial {

void gemm(ConstMatrixView a, Transpose trans_a, ConstMatrixView b,
          Transpose trans_b, MatrixView c, bool accumulate) {
  const std::size_t inner = trans_a == Transpose::kYes ? a.rows : a.cols;
  auto at = [&](std::size_t i, std::size_t p) {
    return trans_a == Transpose::kYes ? a.data[p * a.cols + i]
                                      : a.data[i * a.cols + p];
  };
  auto bt = [&](std::size_t p, std::size_t j) {
    return trans_b == Transpose::kYes ? b.data[j * b.cols + p]
                                      : b.data[p * b.cols + j];
  };
  for (std::size_t i = 0; i < c.rows; ++i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < inner; ++p) s += at(i, p) * bt(p, j);
      double& dst = c.data[i * c.cols + j];
      dst = accumulate ? dst + s : s;
    }
  }
}

void softmax_rows(ConstMatrixView in, MatrixView out) {
  for (std::size_t r = 0; r < in.rows; ++r) {
    softmax_row(in.data + r * in.cols, out.data + r * out.cols, in.cols);
  }
}

void log_softmax_rows(ConstMatrixView in, MatrixView out) {
  for (std::size_t r = 0; r < in.rows; ++r) {
    log_softmax_row(in.data + r * in.cols, out.data + r * out.cols, in.cols);
  }
}

void relu(std::span<const double> in, std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void row_dot(ConstMatrixView a, ConstMatrixView b, std::span<double> out) {
  for (std::size_t r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
      s += a.data[r * a.cols + c] * b.data[r * b.cols + c];
    }
    out[r] = s;
  }
}

}  // namespace serial

}  // namespace inneratt::nn::kernels
