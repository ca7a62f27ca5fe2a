#pragma once

#include <functional>
#include <span>

#include "egg/tensor.hpp"

namespace egg {

// Largest |analytic - central difference| / max(1, |analytic|) over every
// coordinate of x. f must be scalar-valued and deterministic.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                  double h = 1e-6);

// Same measure over every coordinate of every tensor in `params`; f reads the
// parameters through their shared storage. Parameter gradients are left zeroed.
double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h = 1e-6);

}  // namespace egg
