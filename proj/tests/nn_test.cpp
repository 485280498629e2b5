#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "inneratt/nn/adam.hpp"
#include "inneratt/nn/errors.hpp"
#include "inneratt/nn/kernels.hpp"
#include "inneratt/nn/ops.hpp"
#include "oracles.hpp"

using namespace inneratt;
using namespace inneratt::nn;

TEST_CASE("matmul identity and zero cases") {
  Tape tape;
  Var eye = tape.constant(NdArray::matrix(2, 2, {1, 0, 0, 1}));
  Var m = tape.constant(NdArray::matrix(2, 2, {1, 2, 3, 4}));
  CHECK(matmul(eye, m).value() == NdArray::matrix(2, 2, {1, 2, 3, 4}));

  Var row = tape.constant(NdArray::matrix(1, 2, {1, 2}));
  Var zeros = tape.constant(NdArray::matrix(2, 1, {0, 0}));
  CHECK(matmul(row, zeros).value() == NdArray::matrix(1, 1, {0}));
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tape tape;
  Var a = tape.constant(NdArray({2, 3}));
  Var b = tape.constant(NdArray({2, 3}));
  try {
    matmul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    CHECK(what.find("[2x3]") != std::string::npos);
    CHECK(what.find("vs [2x3]") != std::string::npos);
  }
}

TEST_CASE("matmul gradients match central differences") {
  Rng rng(7);
  NdArray a = oracle::random_array({3, 4}, rng);
  NdArray b = oracle::random_array({4, 2}, rng);
  Tape tape;
  Var av = tape.leaf(a);
  Var bv = tape.leaf(b);
  tape.backward(sum(matmul(av, bv)));

  auto f = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
    return s;
  };
  // Sum of a bilinear form: central differences are exact up to rounding.
  NdArray fd_a = oracle::central_difference(&a, f);
  NdArray fd_b = oracle::central_difference(&b, f);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(tape.grad(av)[i] - fd_a[i]) <= 1e-6 * std::max(1.0, std::abs(fd_a[i])));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    CHECK(std::abs(tape.grad(bv)[i] - fd_b[i]) <= 1e-6 * std::max(1.0, std::abs(fd_b[i])));
  }
}

TEST_CASE("relu values and gradient mask") {
  Tape tape;
  Var x = tape.leaf(NdArray::vector({-1.0, 0.0, 2.0}));
  Var y = relu(x);
  CHECK(y.value() == NdArray::vector({0.0, 0.0, 2.0}));
  tape.backward(sum(y));
  CHECK(tape.grad(x) == NdArray::vector({0.0, 0.0, 1.0}));

  Tape t2;
  Var pos = t2.constant(NdArray::vector({0.5, 3.0}));
  CHECK(relu(pos).value() == pos.value());

  Rng rng(3);
  NdArray in = oracle::random_array({5, 4}, rng);
  NdArray weights = oracle::random_array({5, 4}, rng);
  Tape t3;
  Var xv = t3.leaf(in);
  t3.backward(sum(mul(relu(xv), t3.constant(weights))));
  auto f = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) s += std::max(0.0, in[i]) * weights[i];
    return s;
  };
  NdArray fd = oracle::central_difference(&in, f);
  CHECK(oracle::max_rel_error(t3.grad(xv), fd) < 1e-6);
}

TEST_CASE("softmax closed forms and overflow safety") {
  Tape tape;
  for (double c : {-50.0, 0.0, 3.5, 1e6}) {
    Var p = softmax(tape.constant(NdArray::vector({c, c, c})));
    for (double v : p.value().data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  Var p = softmax(tape.constant(NdArray::vector({0.0, std::log(3.0)})));
  CHECK(p.value()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.value()[1] == doctest::Approx(0.75).epsilon(1e-12));

  // exp(-1000) is below the double range, so the exact answer rounds to
  // (1, 0) and must not produce NaN.
  Var big = softmax(tape.constant(NdArray::vector({1000.0, 0.0})));
  CHECK(big.value()[0] == 1.0);
  CHECK(big.value()[1] == 0.0);
  CHECK(big.value().all_finite());
}

TEST_CASE("softmax property: normalized, positive, shift invariant") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    NdArray s = oracle::random_array({n}, rng, -1e6, 1e6);
    const double shift = rng.uniform(-100.0, 100.0);
    NdArray shifted = s;
    for (double& v : shifted.data()) v += shift;
    Tape tape;
    const NdArray& p = softmax(tape.constant(s)).value();
    const NdArray& q = softmax(tape.constant(shifted)).value();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(p[i] >= 0.0);
      CHECK(p[i] <= 1.0);
      total += p[i];
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
    // Shift invariance up to rounding of the shifted inputs themselves.
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) <= 1e-9);
  }
}

TEST_CASE("softmax and log_softmax gradients") {
  Rng rng(5);
  NdArray s = oracle::random_array({3, 4}, rng, -2, 2);
  NdArray w = oracle::random_array({3, 4}, rng);
  for (bool use_log : {false, true}) {
    Tape tape;
    Var x = tape.leaf(s);
    Var y = use_log ? log_softmax_rows(x) : softmax_rows(x);
    tape.backward(sum(mul(y, tape.constant(w))));
    auto f = [&] {
      double total = 0.0;
      for (std::size_t r = 0; r < 3; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < 4; ++c) z += std::exp(s(r, c));
        for (std::size_t c = 0; c < 4; ++c) {
          const double v = use_log ? s(r, c) - std::log(z) : std::exp(s(r, c)) / z;
          total += v * w(r, c);
        }
      }
      return total;
    };
    CHECK(oracle::max_rel_error(tape.grad(x), oracle::central_difference(&s, f)) < 1e-6);
  }
}

TEST_CASE("backward on analytic losses") {
  Tape tape;
  Var w = tape.leaf(NdArray({2, 3}, 0.7));
  tape.backward(sum(w));
  CHECK(tape.grad(w) == NdArray({2, 3}, 1.0));

  Tape t2;
  NdArray wv = NdArray::matrix(1, 3, {0.5, -1.0, 2.0});
  NdArray xv = NdArray::matrix(1, 3, {1.0, 3.0, -0.5});
  Var wl = t2.leaf(wv);
  Var unused = t2.leaf(NdArray({4}, 9.0));
  Var dot = row_dot(wl, t2.constant(xv));
  t2.backward(sum(square(dot)));
  const double d = 0.5 * 1.0 + -1.0 * 3.0 + 2.0 * -0.5;
  for (std::size_t i = 0; i < 3; ++i) CHECK(t2.grad(wl)[i] == doctest::Approx(2 * d * xv[i]));
  CHECK(t2.grad(unused) == NdArray({4}, 0.0));
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Var w = tape.leaf(NdArray({3}, 1.0));
  CHECK_THROWS_AS(tape.backward(relu(w)), ContractError);
}

TEST_CASE("composite ops gradient check") {
  Rng rng(21);
  NdArray a = oracle::random_array({4, 3}, rng);
  NdArray b = oracle::random_array({4, 3}, rng);
  NdArray c = oracle::random_array({4, 1}, rng);
  const std::vector<std::size_t> cols = {0, 2, 1, 2};
  auto build = [&](Tape& tape, bool leaves, Var* va, Var* vb, Var* vc) {
    *va = leaves ? tape.leaf(a) : tape.constant(a);
    *vb = leaves ? tape.leaf(b) : tape.constant(b);
    *vc = leaves ? tape.leaf(c) : tape.constant(c);
    Var cat = concat_cols({*va, *vb});
    Var part = slice_cols(cat, 2, 3);
    Var scaled = mul_col(part, *vc);
    Var clipped = clamp(scaled, -0.3, 0.4);
    Var lo = minimum(exp(clipped), add_scalar(scale(*vb, 2.0), 1.0));
    Var picked = pick(lo, cols);
    return add(mean(sub(row_sum(lo), picked)), mean(square(row_dot(*va, *vb))));
  };
  Tape tape;
  Var va, vb, vc;
  tape.backward(build(tape, true, &va, &vb, &vc));
  auto f = [&] {
    Tape t;
    Var x, y, z;
    return build(t, false, &x, &y, &z).value()[0];
  };
  CHECK(oracle::max_rel_error(tape.grad(va), oracle::central_difference(&a, f)) < 1e-6);
  CHECK(oracle::max_rel_error(tape.grad(vb), oracle::central_difference(&b, f)) < 1e-6);
  CHECK(oracle::max_rel_error(tape.grad(vc), oracle::central_difference(&c, f)) < 1e-6);
}

TEST_CASE("parallel kernels agree with serial reference") {
  Rng rng(2);
  using kernels::Transpose;
  for (auto [ta, tb] : {std::pair{Transpose::kNo, Transpose::kNo},
                        {Transpose::kYes, Transpose::kNo},
                        {Transpose::kNo, Transpose::kYes}}) {
    const std::size_t m = 300, k = 17, n = 9;
    NdArray a = ta == Transpose::kYes ? oracle::random_array({k, m}, rng)
                                      : oracle::random_array({m, k}, rng);
    NdArray b = tb == Transpose::kYes ? oracle::random_array({n, k}, rng)
                                      : oracle::random_array({k, n}, rng);
    NdArray c1({m, n}, 0.5), c2({m, n}, 0.5);
    kernels::gemm({a.data().data(), a.rows(), a.cols()}, ta, {b.data().data(), b.rows(), b.cols()},
                  tb, {c1.data().data(), m, n}, true);
    kernels::serial::gemm({a.data().data(), a.rows(), a.cols()}, ta,
                          {b.data().data(), b.rows(), b.cols()}, tb, {c2.data().data(), m, n}, true);
    CHECK(oracle::max_rel_error(c1, c2) < 1e-12);
  }
  NdArray s = oracle::random_array({400, 5}, rng, -30, 30);
  NdArray p1(s.shape()), p2(s.shape());
  kernels::softmax_rows({s.data().data(), 400, 5}, {p1.data().data(), 400, 5});
  kernels::serial::softmax_rows({s.data().data(), 400, 5}, {p2.data().data(), 400, 5});
  CHECK(p1 == p2);
}

TEST_CASE("adam zero gradient is identity") {
  NdArray w = NdArray::vector({1.0, -2.0, 3.0});
  AdamState state;
  for (int i = 0; i < 25; ++i) adam_step(w, NdArray({3}), state, {});
  CHECK(w == NdArray::vector({1.0, -2.0, 3.0}));
  CHECK(state.step == 25);
}

TEST_CASE("adam first step moves each element by about lr") {
  NdArray w = NdArray::vector({0.0, 1.0});
  AdamState state;
  adam_step(w, NdArray::vector({3.0, -0.5}), state, {.lr = 1e-3});
  CHECK(w[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-6));
}

TEST_CASE("adam matches scalar reference on w^2") {
  NdArray w = NdArray::vector({1.0});
  AdamState state;
  // Scalar reference implementation.
  double ref = 1.0, m = 0.0, v = 0.0;
  double prev = 1.0;
  for (int t = 1; t <= 10; ++t) {
    const double g = 2.0 * ref;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);

    adam_step(w, NdArray::vector({2.0 * w[0]}), state, {.lr = 0.01});
    CHECK(std::abs(w[0] - ref) <= 1e-12);
    CHECK(w[0] * w[0] < prev * prev);
    prev = w[0];
  }
}

TEST_CASE("adam shape mismatch") {
  NdArray w({3});
  AdamState state;
  CHECK_THROWS_AS(adam_step(w, NdArray({4}), state, {}), DimensionError);
}

TEST_CASE("ops stay finite on large finite inputs") {
  Rng rng(9);
  NdArray x = oracle::random_array({6, 5}, rng, -1e6, 1e6);
  Tape tape;
  Var v = tape.constant(x);
  CHECK(softmax_rows(v).value().all_finite());
  CHECK(log_softmax_rows(v).value().all_finite());
  CHECK(relu(v).value().all_finite());
  CHECK(matmul(v, tape.constant(oracle::random_array({5, 3}, rng, -1e6, 1e6))).value().all_finite());
}
