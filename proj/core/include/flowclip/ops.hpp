// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowclip/tensor.hpp"

namespace flowclip {

// Differentiable tensor primitives. Matrices are rank-2 row-major; vectors are
// rank-1. Every op checks shapes and throws DimensionError naming both
// operands on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Elementwise sum. `b` may also be a vector of length a.cols(), in which case
/// it is added to every row of `a`.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise (Hadamard) product of same-shape tensors.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& x, double c) { return scale(x, c); }
inline Tensor operator*(double c, const Tensor& x) { return scale(x, c); }

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// Arithmetic mean over the rows of an n x D matrix, giving a D-vector.
Tensor avg_pool_rows(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);

/// Normalizes the last axis to zero mean and unit variance, then applies
/// gamma * x_hat + beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

/// Exact (erf-based) GELU.
Tensor gelu(const Tensor& x);

/// Softmax along `axis` (0 or 1 for matrices, 0 for vectors). A negative axis
/// counts from the end.
Tensor softmax(const Tensor& x, int axis = -1);
/// Log-softmax along the last axis.
Tensor log_softmax(const Tensor& x);

/// Scalar element `index` of a vector.
Tensor pick(const Tensor& x, std::size_t index);

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);
/// Single row as a vector.
Tensor row(const Tensor& x, std::size_t index);
/// Stacks matrices (and vectors, as single rows) with equal column count.
Tensor concat_rows(std::span<const Tensor> parts);

/// L2-normalizes every row (or the whole vector). Throws NumericError naming
/// the row when a norm is zero.
Tensor normalize_rows(const Tensor& x);

/// True when every value is finite.
bool all_finite(const Tensor& x);

}  // namespace flowclip
