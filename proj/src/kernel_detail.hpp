#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "egg/kernels.hpp"

namespace egg::kernels::detail {

inline double gemm_element(const GemmShape& s, std::span<const double> a,
                           std::span<const double> b, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (std::size_t p = 0; p < s.k; ++p) {
    const double av = s.trans_a ? a[p * s.m + i] : a[i * s.k + p];
    const double bv = s.trans_b ? b[j * s.k + p] : b[p * s.n + j];
    acc += av * bv;
  }
  return acc;
}

inline void gemm_row(const GemmShape& s, std::span<const double> a, std::span<const double> b,
                     std::span<double> c, bool accumulate, std::size_t i) {
  for (std::size_t j = 0; j < s.n; ++j) {
    const double v = gemm_element(s, a, b, i, j);
    if (accumulate) {
      c[i * s.n + j] += v;
    } else {
      c[i * s.n + j] = v;
    }
  }
}

inline void softmax_row(const double* in, double* out, std::size_t cols) {
  const double mx = *std::max_element(in, in + cols);
  double total = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    out[j] = std::exp(in[j] - mx);
    total += out[j];
  }
  for (std::size_t j = 0; j < cols; ++j) out[j] /= total;
}

inline void log_softmax_row(const double* in, double* out, std::size_t cols) {
  const double mx = *std::max_element(in, in + cols);
  double total = 0.0;
  for (std::size_t j = 0; j < cols; ++j) total += std::exp(in[j] - mx);
  const double lse = mx + std::log(total);
  for (std::size_t j = 0; j < cols; ++j) out[j] = in[j] - lse;
}

inline double apply_unary(Unary kind, double x) {
  switch (kind) {
    case Unary::tanh:
      return std::tanh(x);
    case Unary::sigmoid:
      // Split by sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Unary::relu:
      return x > 0.0 ? x : 0.0;
    case Unary::exp:
      return std::exp(x);
    case Unary::log:
      return std::log(x);
  }
  return x;
}

}  // namespace egg::kernels::detail
