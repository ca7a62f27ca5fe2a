#include "egg/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace egg {

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor probe = x.clone();
  probe.set_requires_grad(true);
  std::vector<Tensor> params{probe};
  return grad_check([&] { return f(probe); }, params, h);
}

double grad_check(const std::function<Tensor()>& f, std::span<Tensor> params, double h) {
  Tape::current().discard();
  for (auto& p : params) p.zero_grad();
  Tensor y = f();
  if (y.recorded()) backward(y);

  double worst = 0.0;
  NoGradGuard no_grad;
  for (auto& p : params) {
    auto values = p.mutable_values();
    const auto analytic = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().item();
      values[i] = saved - h;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  for (auto& p : params) p.zero_grad();
  return worst;
}

}  // namespace egg
