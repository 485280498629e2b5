#include "inneratt/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "inneratt/nn/errors.hpp"
#include "inneratt/nn/kernels.hpp"

namespace inneratt::nn {

namespace {

using kernels::ConstMatrixView;
using kernels::MatrixView;
using kernels::Transpose;

ConstMatrixView view(const NdArray& a) { return {a.data().data(), a.rows(), a.cols()}; }
MatrixView view(NdArray& a) { return {a.data().data(), a.rows(), a.cols()}; }

Shape matrix_shape(std::size_t rows, std::size_t cols) { return {rows, cols}; }

void require(bool ok, const std::string& op, const NdArray& a, const NdArray& b) {
  if (!ok) {
    throw DimensionError(op + ": " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

void accumulate(Tape& tape, Var target, const NdArray& delta) {
  if (NdArray* g = tape.grad_slot(target.id())) {
    auto dst = g->data();
    auto src = delta.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

template <class F>
Var unary(Var x, F&& forward, std::function<void(const NdArray& in, const NdArray& out,
                                                 const NdArray& g, NdArray& gin)>
                                  grad_fn) {
  const NdArray& in = x.value();
  NdArray out(in.shape());
  forward(in, out);
  Tape* tape = x.tape();
  return tape->record(std::move(out), {x}, [x, grad_fn](Tape& t, std::size_t self) {
    NdArray* gin = t.grad_slot(x.id());
    if (gin == nullptr) return;
    grad_fn(t.value(x.id()), t.value(self), t.grad_of(self), *gin);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const NdArray& av = a.value();
  const NdArray& bv = b.value();
  require(av.cols() == bv.rows(), "matmul", av, bv);
  NdArray out(matrix_shape(av.rows(), bv.cols()));
  kernels::gemm(view(av), Transpose::kNo, view(bv), Transpose::kNo, view(out), false);
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    if (NdArray* ga = t.grad_slot(a.id())) {
      kernels::gemm(view(g), Transpose::kNo, view(t.value(b.id())), Transpose::kYes,
                    view(*ga), true);
    }
    if (NdArray* gb = t.grad_slot(b.id())) {
      kernels::gemm(view(t.value(a.id())), Transpose::kYes, view(g), Transpose::kNo,
                    view(*gb), true);
    }
  });
}

Var linear(Var x, Var w, Var bias) {
  const NdArray& xv = x.value();
  const NdArray& wv = w.value();
  const NdArray& bv = bias.value();
  require(xv.cols() == wv.rows(), "linear", xv, wv);
  require(bv.size() == wv.cols(), "linear bias", wv, bv);
  const std::size_t rows = xv.rows();
  const std::size_t cols = wv.cols();
  NdArray out(matrix_shape(rows, cols));
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + r * cols);
  }
  kernels::gemm(view(xv), Transpose::kNo, view(wv), Transpose::kNo, view(out), true);
  return x.tape()->record(std::move(out), {x, w, bias},
                          [x, w, bias](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    if (NdArray* gx = t.grad_slot(x.id())) {
      kernels::gemm(view(g), Transpose::kNo, view(t.value(w.id())), Transpose::kYes,
                    view(*gx), true);
    }
    if (NdArray* gw = t.grad_slot(w.id())) {
      kernels::gemm(view(t.value(x.id())), Transpose::kYes, view(g), Transpose::kNo,
                    view(*gw), true);
    }
    if (NdArray* gb = t.grad_slot(bias.id())) {
      const std::size_t n = g.cols();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < n; ++c) (*gb)[c] += g(r, c);
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  NdArray out = a.value();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad_of(self));
    accumulate(t, b, t.grad_of(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  NdArray out = a.value();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad_of(self));
    if (NdArray* gb = t.grad_slot(b.id())) {
      const NdArray& g = t.grad_of(self);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  NdArray out = a.value();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    if (NdArray* ga = t.grad_slot(a.id())) {
      const NdArray& bv = t.value(b.id());
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv[i];
    }
    if (NdArray* gb = t.grad_slot(b.id())) {
      const NdArray& av = t.value(a.id());
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      a,
      [factor](const NdArray& in, NdArray& out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * factor;
      },
      [factor](const NdArray&, const NdArray&, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * factor;
      });
}

Var add_scalar(Var a, double offset) {
  return unary(
      a,
      [offset](const NdArray& in, NdArray& out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + offset;
      },
      [](const NdArray&, const NdArray&, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i];
      });
}

Var relu(Var x) {
  return unary(
      x, [](const NdArray& in, NdArray& out) { kernels::relu(in.data(), out.data()); },
      [](const NdArray& in, const NdArray&, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in[i] > 0.0) gin[i] += g[i];
        }
      });
}

Var exp(Var x) {
  return unary(
      x,
      [](const NdArray& in, NdArray& out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::exp(in[i]);
      },
      [](const NdArray&, const NdArray& out, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[i] += g[i] * out[i];
      });
}

Var square(Var x) {
  return unary(
      x,
      [](const NdArray& in, NdArray& out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * in[i];
      },
      [](const NdArray& in, const NdArray&, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) gin[i] += 2.0 * in[i] * g[i];
      });
}

Var clamp(Var x, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp bounds reversed");
  return unary(
      x,
      [lo, hi](const NdArray& in, NdArray& out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::clamp(in[i], lo, hi);
      },
      [lo, hi](const NdArray& in, const NdArray&, const NdArray& g, NdArray& gin) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (in[i] > lo && in[i] < hi) gin[i] += g[i];
        }
      });
}

Var minimum(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "minimum");
  NdArray out = a.value();
  auto bv = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], bv[i]);
  // Ties route the gradient to the first operand.
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    const NdArray& av = t.value(a.id());
    const NdArray& bv = t.value(b.id());
    NdArray* ga = t.grad_slot(a.id());
    NdArray* gb = t.grad_slot(b.id());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] <= bv[i]) {
        if (ga) (*ga)[i] += g[i];
      } else if (gb) {
        (*gb)[i] += g[i];
      }
    }
  });
}

Var softmax(Var scores) {
  if (scores.value().size() == 0) throw ContractError("softmax of an empty vector");
  return softmax_rows(scores);
}

Var softmax_rows(Var scores) {
  return unary(
      scores,
      [](const NdArray& in, NdArray& out) { kernels::softmax_rows(view(in), view(out)); },
      [](const NdArray&, const NdArray& y, const NdArray& g, NdArray& gin) {
        const std::size_t cols = y.cols();
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < cols; ++c) {
            gin(r, c) += y(r, c) * (g(r, c) - dot);
          }
        }
      });
}

Var log_softmax_rows(Var scores) {
  return unary(
      scores,
      [](const NdArray& in, NdArray& out) {
        kernels::log_softmax_rows(view(in), view(out));
      },
      [](const NdArray&, const NdArray& y, const NdArray& g, NdArray& gin) {
        const std::size_t cols = y.cols();
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double total = 0.0;
          for (std::size_t c = 0; c < cols; ++c) total += g(r, c);
          for (std::size_t c = 0; c < cols; ++c) {
            gin(r, c) += g(r, c) - std::exp(y(r, c)) * total;
          }
        }
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat of zero arrays");
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.value().rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.value().cols();
  }
  NdArray out(matrix_shape(rows, cols));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const NdArray& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data().begin() + r * v.cols(), v.cols(),
                  out.data().begin() + r * cols + offset);
    }
    offset += v.cols();
  }
  return parts.front().tape()->record(std::move(out), parts, [parts](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    std::size_t offset = 0;
    for (const Var& p : parts) {
      const std::size_t pc = t.value(p.id()).cols();
      if (NdArray* gp = t.grad_slot(p.id())) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < pc; ++c) (*gp)(r, c) += g(r, offset + c);
        }
      }
      offset += pc;
    }
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const NdArray& xv = x.value();
  if (begin + count > xv.cols()) {
    throw DimensionError("slice_cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " +
                         shape_string(xv.shape()));
  }
  NdArray out(matrix_shape(xv.rows(), count));
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, begin + c);
  }
  return x.tape()->record(std::move(out), {x}, [x, begin, count](Tape& t, std::size_t self) {
    NdArray* gx = t.grad_slot(x.id());
    if (gx == nullptr) return;
    const NdArray& g = t.grad_of(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) (*gx)(r, begin + c) += g(r, c);
    }
  });
}

Var row_dot(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "row_dot");
  const NdArray& av = a.value();
  NdArray out(matrix_shape(av.rows(), 1));
  kernels::row_dot(view(av), view(b.value()), out.data());
  return a.tape()->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    const NdArray& av = t.value(a.id());
    const NdArray& bv = t.value(b.id());
    NdArray* ga = t.grad_slot(a.id());
    NdArray* gb = t.grad_slot(b.id());
    const std::size_t cols = av.cols();
    for (std::size_t r = 0; r < av.rows(); ++r) {
      const double gr = g[r];
      for (std::size_t c = 0; c < cols; ++c) {
        if (ga) (*ga)(r, c) += gr * bv(r, c);
        if (gb) (*gb)(r, c) += gr * av(r, c);
      }
    }
  });
}

Var row_sum(Var x) {
  const NdArray& xv = x.value();
  NdArray out(matrix_shape(xv.rows(), 1));
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) s += xv(r, c);
    out[r] = s;
  }
  return x.tape()->record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    NdArray* gx = t.grad_slot(x.id());
    if (gx == nullptr) return;
    const NdArray& g = t.grad_of(self);
    for (std::size_t r = 0; r < gx->rows(); ++r) {
      for (std::size_t c = 0; c < gx->cols(); ++c) (*gx)(r, c) += g[r];
    }
  });
}

Var pick(Var x, std::span<const std::size_t> columns) {
  const NdArray& xv = x.value();
  if (columns.size() != xv.rows()) {
    throw DimensionError("pick: " + std::to_string(columns.size()) +
                         " indices for " + shape_string(xv.shape()));
  }
  NdArray out(matrix_shape(xv.rows(), 1));
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    if (columns[r] >= xv.cols()) {
      throw ContractError("pick: column " + std::to_string(columns[r]) +
                          " out of range for " + shape_string(xv.shape()));
    }
    out[r] = xv(r, columns[r]);
  }
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  return x.tape()->record(std::move(out), {x}, [x, cols](Tape& t, std::size_t self) {
    NdArray* gx = t.grad_slot(x.id());
    if (gx == nullptr) return;
    const NdArray& g = t.grad_of(self);
    for (std::size_t r = 0; r < cols.size(); ++r) (*gx)(r, cols[r]) += g[r];
  });
}

Var mul_col(Var x, Var column) {
  const NdArray& xv = x.value();
  const NdArray& cv = column.value();
  require(cv.size() == xv.rows(), "mul_col", xv, cv);
  NdArray out = xv;
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) *= cv[r];
  }
  return x.tape()->record(std::move(out), {x, column}, [x, column](Tape& t, std::size_t self) {
    const NdArray& g = t.grad_of(self);
    const NdArray& xv = t.value(x.id());
    const NdArray& cv = t.value(column.id());
    NdArray* gx = t.grad_slot(x.id());
    NdArray* gc = t.grad_slot(column.id());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < xv.cols(); ++c) {
        if (gx) (*gx)(r, c) += g(r, c) * cv[r];
        acc += g(r, c) * xv(r, c);
      }
      if (gc) (*gc)[r] += acc;
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return x.tape()->record(NdArray::scalar(s), {x}, [x](Tape& t, std::size_t self) {
    NdArray* gx = t.grad_slot(x.id());
    if (gx == nullptr) return;
    const double g = t.grad_of(self)[0];
    for (double& v : gx->data()) v += g;
  });
}

Var mean(Var x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ContractError("mean of an empty array");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

}  // namespace inneratt::nn
