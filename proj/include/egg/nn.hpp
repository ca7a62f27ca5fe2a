#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "egg/ops.hpp"
#include "egg/rng.hpp"
#include "egg/tensor.hpp"

namespace egg {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedTensor>;

// Appends `params` to `out` with every name prefixed by `prefix + "."`.
void append_params(ParamList& out, const std::string& prefix, const ParamList& params);

enum class ParamRole { weight, bias };

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;
  ParamRole role = ParamRole::weight;
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases exactly zero; all
// returned tensors require gradients. Draws happen in `specs` order.
ParamList init_params(const std::vector<ParamSpec>& specs, Rng& rng);

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  Tensor forward(const Tensor& x) const { return linear(x, weight_, bias_); }
  ParamList parameters() const { return {{"W", weight_}, {"b", bias_}}; }

  std::size_t in_features() const { return weight_.dim(1); }
  std::size_t out_features() const { return weight_.dim(0); }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_;
  Tensor bias_;
};

class Embedding {
 public:
  Embedding() = default;
  Embedding(std::size_t vocab, std::size_t dim, Rng& rng);

  Tensor lookup(std::span<const std::size_t> symbols) const {
    return embedding_lookup(table_, symbols);
  }
  // Probability-weighted mixture of rows: weights[B x V] * table.
  Tensor mix(const Tensor& weights) const { return matmul(weights, table_); }

  ParamList parameters() const { return {{"E", table_}}; }
  std::size_t vocab() const { return table_.dim(0); }
  std::size_t dim() const { return table_.dim(1); }
  const Tensor& table() const { return table_; }

 private:
  Tensor table_;
};

enum class CellKind { elman, gru, lstm };

std::string to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& name);

struct RnnState {
  Tensor h;
  std::optional<Tensor> c;  // LSTM only
};

// One recurrent step, x[B x in] -> state[B x H]. With sigma the logistic
// function and * the elementwise product:
//
//   elman: h' = tanh(W_x x + W_h h + b)
//   gru:   r  = sigma(W_xr x + b_xr + W_hr h + b_hr)
//          z  = sigma(W_xz x + b_xz + W_hz h + b_hz)
//          n  = tanh(W_xn x + b_xn + r * (W_hn h + b_hn))
//          h' = (1 - z) * n + z * h
//   lstm:  i = sigma(.), f = sigma(.), g = tanh(.), o = sigma(.)
//          each of the form W_x. x + W_h. h + b.
//          c' = f * c + i * g
//          h' = o * tanh(c')
//
// Gate blocks are stacked row-wise in W_x/W_h in the order listed.
class RnnCell {
 public:
  RnnCell() = default;
  RnnCell(CellKind kind, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  RnnState step(const Tensor& x, const RnnState& state) const;
  RnnState zero_state(std::size_t batch) const;
  // h as given, c zero for LSTM.
  RnnState state_from(const Tensor& h) const;

  CellKind kind() const { return kind_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_size_; }
  ParamList parameters() const;

 private:
  std::size_t gates() const;
  void check_state(const Tensor& x, const RnnState& state) const;

  CellKind kind_ = CellKind::elman;
  std::size_t input_size_ = 0;
  std::size_t hidden_size_ = 0;
  Tensor w_x_, w_h_, b_x_, b_h_;  // b_h_ used by GRU only
};

}  // namespace egg
