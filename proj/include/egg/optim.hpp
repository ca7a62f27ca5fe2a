#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "egg/nn.hpp"

namespace egg {

void zero_grads(const ParamList& params);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;  // first moments, one per parameter
  std::vector<std::vector<double>> v;  // second moments
  std::uint64_t t = 0;
};

AdamState make_adam_state(const ParamList& params, AdamConfig config);

// In-place bias-corrected Adam update of every parameter from its gradient:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
void adam_step(AdamState& state, const ParamList& params);

class Optimizer {
 public:
  explicit Optimizer(ParamList params) : params_(std::move(params)) {}
  virtual ~Optimizer() = default;

  virtual void step() = 0;
  void zero_grad() { zero_grads(params_); }
  const ParamList& params() const { return params_; }

  // Optimizer state as named tensors, for checkpoints.
  virtual ParamList export_state() const = 0;
  virtual void import_state(const std::map<std::string, Tensor>& state) = 0;

 protected:
  ParamList params_;
};

class Adam : public Optimizer {
 public:
  Adam(ParamList params, AdamConfig config);
  void step() override { adam_step(state_, params_); }
  ParamList export_state() const override;
  void import_state(const std::map<std::string, Tensor>& state) override;
  const AdamState& state() const { return state_; }

 private:
  AdamState state_;
};

class Sgd : public Optimizer {
 public:
  Sgd(ParamList params, double lr) : Optimizer(std::move(params)), lr_(lr) {}
  void step() override;
  ParamList export_state() const override { return {}; }
  void import_state(const std::map<std::string, Tensor>&) override {}

 private:
  double lr_;
};

}  // namespace egg
