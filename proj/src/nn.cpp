#include "egg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace egg {

void append_params(ParamList& out, const std::string& prefix, const ParamList& params) {
  for (const auto& p : params) out.push_back({prefix + "." + p.name, p.tensor});
}

ParamList init_params(const std::vector<ParamSpec>& specs, Rng& rng) {
  ParamList out;
  out.reserve(specs.size());
  for (const auto& spec : specs) {
    if (spec.shape.empty()) {
      throw std::invalid_argument("init_params: " + spec.name + " has no dimensions");
    }
    for (std::size_t d : spec.shape) {
      if (d == 0) {
        throw std::invalid_argument("init_params: " + spec.name + " has a zero dimension in " +
                                    shape_str(spec.shape));
      }
    }
    Tensor t(spec.shape, true);
    if (spec.role == ParamRole::weight) {
      if (spec.fan_in == 0) {
        throw std::invalid_argument("init_params: " + spec.name + " has zero fan-in");
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
      for (double& v : t.mutable_values()) v = rng.uniform(-bound, bound);
    }
    out.push_back({spec.name, t});
  }
  return out;
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  auto p = init_params({{"W", {out, in}, in, ParamRole::weight}, {"b", {out}, 0, ParamRole::bias}},
                       rng);
  weight_ = p[0].tensor;
  bias_ = p[1].tensor;
}

Embedding::Embedding(std::size_t vocab, std::size_t dim, Rng& rng) {
  // Rows are looked up rather than multiplied, so the "fan-in" of an
  // embedding row is taken to be the vocabulary size.
  table_ = init_params({{"E", {vocab, dim}, vocab, ParamRole::weight}}, rng)[0].tensor;
}

std::string to_string(CellKind kind) {
  switch (kind) {
    case CellKind::elman:
      return "elman";
    case CellKind::gru:
      return "gru";
    case CellKind::lstm:
      return "lstm";
  }
  return "?";
}

CellKind parse_cell_kind(const std::string& name) {
  if (name == "elman" || name == "rnn") return CellKind::elman;
  if (name == "gru") return CellKind::gru;
  if (name == "lstm") return CellKind::lstm;
  throw std::invalid_argument("unknown cell kind '" + name + "' (expected elman, gru or lstm)");
}

std::size_t RnnCell::gates() const {
  switch (kind_) {
    case CellKind::elman:
      return 1;
    case CellKind::gru:
      return 3;
    case CellKind::lstm:
      return 4;
  }
  return 1;
}

RnnCell::RnnCell(CellKind kind, std::size_t input_size, std::size_t hidden_size, Rng& rng)
    : kind_(kind), input_size_(input_size), hidden_size_(hidden_size) {
  const std::size_t g = gates() * hidden_size;
  std::vector<ParamSpec> specs{{"W_x", {g, input_size}, input_size, ParamRole::weight},
                               {"W_h", {g, hidden_size}, hidden_size, ParamRole::weight},
                               {"b_x", {g}, 0, ParamRole::bias}};
  if (kind == CellKind::gru) specs.push_back({"b_h", {g}, 0, ParamRole::bias});
  auto p = init_params(specs, rng);
  w_x_ = p[0].tensor;
  w_h_ = p[1].tensor;
  b_x_ = p[2].tensor;
  if (kind == CellKind::gru) b_h_ = p[3].tensor;
}

ParamList RnnCell::parameters() const {
  ParamList out{{"W_x", w_x_}, {"W_h", w_h_}, {"b_x", b_x_}};
  if (kind_ == CellKind::gru) out.push_back({"b_h", b_h_});
  return out;
}

RnnState RnnCell::zero_state(std::size_t batch) const {
  RnnState s{Tensor({batch, hidden_size_}), std::nullopt};
  if (kind_ == CellKind::lstm) s.c = Tensor({batch, hidden_size_});
  return s;
}

RnnState RnnCell::state_from(const Tensor& h) const {
  RnnState s{h, std::nullopt};
  if (kind_ == CellKind::lstm) s.c = Tensor({h.dim(0), hidden_size_});
  return s;
}

void RnnCell::check_state(const Tensor& x, const RnnState& state) const {
  if (x.rank() != 2 || x.dim(1) != input_size_) {
    throw ShapeError("RnnCell: input " + shape_str(x.shape()) + " does not match input size " +
                     std::to_string(input_size_));
  }
  const Shape want{x.dim(0), hidden_size_};
  if (state.h.shape() != want) {
    throw ShapeError("RnnCell: hidden state " + shape_str(state.h.shape()) + ", expected " +
                     shape_str(want));
  }
  if (kind_ == CellKind::lstm && (!state.c || state.c->shape() != want)) {
    throw ShapeError("RnnCell: lstm cell state missing or not " + shape_str(want));
  }
}

RnnState RnnCell::step(const Tensor& x, const RnnState& state) const {
  check_state(x, state);
  const std::size_t H = hidden_size_;
  switch (kind_) {
    case CellKind::elman: {
      return {tanh(linear(x, w_x_, b_x_) + linear(state.h, w_h_)), std::nullopt};
    }
    case CellKind::gru: {
      const Tensor zx = linear(x, w_x_, b_x_);
      const Tensor zh = linear(state.h, w_h_, b_h_);
      const Tensor r = sigmoid(slice_cols(zx, 0, H) + slice_cols(zh, 0, H));
      const Tensor z = sigmoid(slice_cols(zx, H, H) + slice_cols(zh, H, H));
      const Tensor n = tanh(slice_cols(zx, 2 * H, H) + r * slice_cols(zh, 2 * H, H));
      return {n + z * (state.h - n), std::nullopt};
    }
    case CellKind::lstm: {
      const Tensor zz = linear(x, w_x_, b_x_) + linear(state.h, w_h_);
      const Tensor i = sigmoid(slice_cols(zz, 0, H));
      const Tensor f = sigmoid(slice_cols(zz, H, H));
      const Tensor g = tanh(slice_cols(zz, 2 * H, H));
      const Tensor o = sigmoid(slice_cols(zz, 3 * H, H));
      const Tensor c = f * *state.c + i * g;
      return {o * tanh(c), c};
    }
  }
  return state;
}

}  // namespace egg
