#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "egg/tensor.hpp"

// Differentiable operations. Binary elementwise ops accept equal shapes or a
// rank-0 operand broadcast against the other; every other alignment is an
// explicit reshape/expand in the caller.
namespace egg {

enum class Elementwise { add, sub, mul, div };

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x[B x in] * W[out x in]^T (+ b[out] on every row).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor linear(const Tensor& x, const Tensor& weight);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
// v[n] -> [rows x n], every row a copy of v.
Tensor expand_rows(const Tensor& v, std::size_t rows);
// Columns [start, start + count) of a rank-2 tensor.
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);

enum class Activation { tanh, sigmoid, relu };

Tensor activation(Activation kind, const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
// Requires strictly positive inputs.
Tensor log(const Tensor& a);
// Clamps into [lo, hi]; gradient passes only where the input is inside.
Tensor clamp(const Tensor& a, double lo, double hi);

// Normalizes along `axis`, max-subtracted for stability.
Tensor softmax(const Tensor& a, std::size_t axis);
Tensor log_softmax(const Tensor& a, std::size_t axis);

enum class Reduce { sum, mean };

Tensor reduce(Reduce kind, const Tensor& a);
Tensor reduce(Reduce kind, const Tensor& a, std::size_t axis);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);

// Rows of table[V x d] at `indices`; gradients of repeated rows add up.
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> indices);

// out[i] = a[i, indices[i]] for a rank-2 a.
Tensor pick(const Tensor& a, std::span<const std::size_t> indices);

// Row i of the result is row i of candidates[which[i]]. All candidates share
// one rank-2 shape; unselected rows receive no gradient.
Tensor select_rows(std::span<const Tensor> candidates, std::span<const std::size_t> which);

// a where keep[i] (along the leading axis), exactly +0 elsewhere, with no
// gradient reaching the dropped entries.
Tensor keep_where(const Tensor& a, const std::vector<bool>& keep);

// scores[b, k] = sum_h c[b, k, h] * v[b, h].
Tensor batched_matvec(const Tensor& c, const Tensor& v);

// Forward value is the row-wise one-hot argmax of `soft` (lowest index wins
// ties); the gradient passes to `soft` unchanged.
Tensor straight_through(const Tensor& soft);

// Index of the largest entry in each row of a rank-2 tensor, lowest index on ties.
std::vector<std::size_t> argmax_rows(const Tensor& a);

}  // namespace egg
