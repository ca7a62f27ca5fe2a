#include "egg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace egg {

void zero_grads(const ParamList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

AdamState make_adam_state(const ParamList& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), 0.0);
    s.v.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, const ParamList& params) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: state tracks " + std::to_string(state.m.size()) +
                                " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& p = params[k].tensor;
    if (state.m[k].size() != p.numel() || p.grad().size() != p.numel()) {
      throw std::invalid_argument("adam_step: shape mismatch for parameter " + params[k].name);
    }
  }
  ++state.t;
  const auto& c = state.config;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k].tensor;
    auto values = p.mutable_values();
    const auto grad = p.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

Adam::Adam(ParamList params, AdamConfig config)
    : Optimizer(std::move(params)), state_(make_adam_state(params_, config)) {}

ParamList Adam::export_state() const {
  ParamList out;
  out.push_back({"adam.t", Tensor::scalar(static_cast<double>(state_.t))});
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Shape& shape = params_[k].tensor.shape();
    out.push_back({"adam.m." + params_[k].name, Tensor(shape, state_.m[k])});
    out.push_back({"adam.v." + params_[k].name, Tensor(shape, state_.v[k])});
  }
  return out;
}

void Adam::import_state(const std::map<std::string, Tensor>& state) {
  auto fetch = [&](const std::string& name) -> const Tensor& {
    auto it = state.find(name);
    if (it == state.end()) throw std::runtime_error("Adam: checkpoint lacks " + name);
    return it->second;
  };
  state_.t = static_cast<std::uint64_t>(fetch("adam.t").item());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Tensor& m = fetch("adam.m." + params_[k].name);
    const Tensor& v = fetch("adam.v." + params_[k].name);
    if (m.numel() != params_[k].tensor.numel() || v.numel() != params_[k].tensor.numel()) {
      throw std::runtime_error("Adam: moment shape mismatch for " + params_[k].name);
    }
    state_.m[k].assign(m.values().begin(), m.values().end());
    state_.v[k].assign(v.values().begin(), v.values().end());
  }
}

void Sgd::step() {
  for (const auto& p : params_) {
    Tensor t = p.tensor;
    auto values = t.mutable_values();
    const auto grad = t.grad();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= lr_ * grad[i];
  }
}

}  // namespace egg
