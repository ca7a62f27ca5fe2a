#pragma once

#include <cstring>
#include <vector>

#include "egg/rng.hpp"
#include "egg/tensor.hpp"

namespace egg::test {

inline Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape), requires_grad);
  for (double& v : t.mutable_values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

// Bitwise equality, so that -0 vs +0 and NaN payloads count as differences.
inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace egg::test
