#pragma once

#include "stmi/tensor.hpp"

// Differentiable tensor operations. Every op computes its forward result
// eagerly and, while the tape is recording and some input requires gradients,
// appends one adjoint step to the tape. Binary elementwise ops accept exactly
// two shape patterns: identical shapes, or one scalar (numel 1) operand.
// Anything fancier is rejected with a DimensionError.
namespace stmi::ops {

// c[i][j] = sum_k a[i][k] * b[k][j]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

// Row-stable softmax (row-max subtraction). NaN input raises NumericError.
Tensor softmax_rows(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double c);

// Exact Gaussian-CDF form: gelu(x) = 0.5 x (1 + erf(x / sqrt(2))).
Tensor gelu(Tape& tape, const Tensor& a);

// Rows divided by their L2 norm. A row with norm <= 1e-12 raises NumericError.
Tensor l2_normalize_rows(Tape& tape, const Tensor& a);

// Per-row standardization with learned per-column gain/bias.
Tensor layer_norm_rows(Tape& tape, const Tensor& x, const Tensor& gamma,
                       const Tensor& beta, double eps = 1e-5);

Tensor sum_all(Tape& tape, const Tensor& a);
Tensor mean_all(Tape& tape, const Tensor& a);
// [R x C] -> [R x 1] row means.
Tensor mean_rows(Tape& tape, const Tensor& a);

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t start, std::size_t len);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t start, std::size_t len);

// x[R x C] plus a length-C vector broadcast over rows (the bias pattern).
Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& v);
// Row i of x scaled by w[i]; w is a length-R vector (learnable).
Tensor scale_rows(Tape& tape, const Tensor& x, const Tensor& w);

// Every entry of row i replaced by that row's max/min. The adjoint routes to
// the first extremal position of the row.
Tensor row_max_broadcast(Tape& tape, const Tensor& a);
Tensor row_min_broadcast(Tape& tape, const Tensor& a);

// Same data, new shape (numel must match).
Tensor reshape(Tape& tape, const Tensor& a, Shape shape);

} // namespace stmi::ops
