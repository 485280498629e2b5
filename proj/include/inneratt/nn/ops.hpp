#ifndef INNERATT_NN_OPS_HPP_
#define INNERATT_NN_OPS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "inneratt/nn/tape.hpp"

// Differentiable operations. Matrices are R x C; a 1-D array of length n is
// treated as 1 x n. Every op throws DimensionError on incompatible shapes.
namespace inneratt::nn {

Var matmul(Var a, Var b);
// x * w + bias, with bias broadcast over rows.
Var linear(Var x, Var w, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

// Subgradient at 0 is 0.
Var relu(Var x);
Var exp(Var x);
Var square(Var x);
Var clamp(Var x, double lo, double hi);
Var minimum(Var a, Var b);

Var softmax(Var scores);
Var softmax_rows(Var scores);
Var log_softmax_rows(Var scores);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);

// R x 1 results.
Var row_dot(Var a, Var b);
Var row_sum(Var x);
Var pick(Var x, std::span<const std::size_t> columns);

// Scales each row of x by the matching entry of the R x 1 column.
Var mul_col(Var x, Var column);

// Scalars (shape {1}).
Var sum(Var x);
Var mean(Var x);

}  // namespace inneratt::nn

#endif  // INNERATT_NN_OPS_HPP_
