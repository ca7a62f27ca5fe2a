#include "egg/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace egg {

void VocabSpec::validate() const {
  if (size < 2) {
    throw std::invalid_argument("vocabulary size must be at least 2, got " +
                                std::to_string(size));
  }
  if (max_len < 1) throw std::invalid_argument("max_len must be at least 1");
}

const char* to_string(ChannelMode mode) { return mode == ChannelMode::gs ? "gs" : "reinforce"; }

const char* to_string(MessageKind kind) {
  return kind == MessageKind::symbol ? "symbol" : "sequence";
}

std::vector<std::size_t> RelaxedMessage::hard_symbols() const {
  const std::size_t B = batch(), L = max_len();
  std::vector<std::size_t> out(B * L);
  for (std::size_t t = 0; t < L; ++t) {
    const auto idx = argmax_rows(steps[t]);
    for (std::size_t b = 0; b < B; ++b) out[b * L + t] = idx[b];
  }
  return out;
}

std::size_t message_batch(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(msg)>, DiscreteMessage>) {
          return msg.batch;
        } else {
          return msg.batch();
        }
      },
      m);
}

std::size_t message_max_len(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(msg)>, DiscreteMessage>) {
          return msg.max_len;
        } else {
          return msg.max_len();
        }
      },
      m);
}

const std::vector<std::size_t>& message_lengths(const Message& m) {
  return std::visit([](const auto& msg) -> const std::vector<std::size_t>& { return msg.lengths; },
                    m);
}

std::vector<std::size_t> message_symbols(const Message& m) {
  if (const auto* d = std::get_if<DiscreteMessage>(&m)) return d->symbols;
  return std::get<RelaxedMessage>(m).hard_symbols();
}

std::vector<std::size_t> message_lengths(std::span<const std::size_t> symbols,
                                         std::size_t batch, std::size_t max_len) {
  if (symbols.size() != batch * max_len) {
    throw std::invalid_argument("message_lengths: grid of " + std::to_string(symbols.size()) +
                                " symbols is not " + std::to_string(batch) + " x " +
                                std::to_string(max_len));
  }
  std::vector<std::size_t> out(batch, max_len);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < max_len; ++t) {
      if (symbols[b * max_len + t] == VocabSpec::eos) {
        out[b] = t + 1;
        break;
      }
    }
  }
  return out;
}

Tensor sample_gumbel(const Shape& shape, Rng& rng) {
  Tensor g(shape);
  for (double& v : g.mutable_values()) v = -std::log(-std::log(rng.uniform_open()));
  return g;
}

Tensor gs_relax(const Tensor& logits, const Tensor& gumbel, double tau, bool straight_through) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("gs_sample: temperature must be positive, got " +
                                std::to_string(tau));
  }
  if (logits.rank() == 0) throw ShapeError("gs_sample: logits must have a symbol axis");
  const Tensor y = softmax(scale(logits + gumbel, 1.0 / tau), logits.rank() - 1);
  return straight_through ? egg::straight_through(y) : y;
}

Tensor gs_sample(const Tensor& logits, double tau, Rng& rng, bool straight_through) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("gs_sample: temperature must be positive, got " +
                                std::to_string(tau));
  }
  return gs_relax(logits, sample_gumbel(logits.shape(), rng), tau, straight_through);
}

Tensor categorical_log_prob(const Tensor& logits, std::span<const std::size_t> index) {
  return pick(log_softmax(logits, 1), index);
}

CategoricalSample categorical_sample(const Tensor& logits, Rng& rng) {
  if (logits.rank() != 2) throw ShapeError("categorical_sample: logits must be batch x V");
  const std::size_t B = logits.dim(0), V = logits.dim(1);
  const Tensor logp = log_softmax(logits, 1);
  CategoricalSample out;
  out.index.resize(B);
  const auto lp = logp.values();
  for (std::size_t b = 0; b < B; ++b) {
    // Inverse CDF; the last symbol absorbs rounding in the cumulative sum.
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t chosen = V - 1;
    for (std::size_t j = 0; j < V; ++j) {
      cumulative += std::exp(lp[b * V + j]);
      if (u < cumulative) {
        chosen = j;
        break;
      }
    }
    out.index[b] = chosen;
  }
  out.log_prob = pick(logp, out.index);
  return out;
}

CategoricalSample categorical_greedy(const Tensor& logits) {
  CategoricalSample out;
  out.index = argmax_rows(logits);
  out.log_prob = categorical_log_prob(logits, out.index);
  return out;
}

Tensor categorical_entropy(const Tensor& logits) {
  const Tensor logp = log_softmax(logits, 1);
  return neg(sum(exp(logp) * logp, 1));
}

Tensor reinforce_surrogate(const Tensor& per_sample_loss, const Tensor& per_sample_log_prob,
                           RunningMeanBaseline& baseline, bool update_baseline) {
  if (per_sample_loss.shape() != per_sample_log_prob.shape() || per_sample_loss.rank() != 1) {
    throw ShapeError("reinforce_surrogate: loss " + shape_str(per_sample_loss.shape()) +
                     " and log_prob " + shape_str(per_sample_log_prob.shape()) +
                     " must be aligned vectors");
  }
  const double b = baseline.value();
  const Tensor advantage = per_sample_loss.detach() - Tensor::scalar(b);
  const Tensor surrogate = mean(advantage * per_sample_log_prob + per_sample_loss);
  if (update_baseline) {
    double total = 0.0;
    for (double v : per_sample_loss.values()) total += v;
    baseline.update(total / static_cast<double>(per_sample_loss.numel()));
  }
  return surrogate;
}

}  // namespace egg
