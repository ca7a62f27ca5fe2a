#pragma once

#include <cstddef>
#include <optional>
#include <variant>
#include <vector>

#include "egg/ops.hpp"
#include "egg/rng.hpp"
#include "egg/tensor.hpp"

namespace egg {

// Vocabulary of `size` symbols; symbol 0 is always end-of-sequence. Messages
// carry at most `max_len` symbols, the eos included.
struct VocabSpec {
  static constexpr std::size_t eos = 0;
  std::size_t size = 2;
  std::size_t max_len = 1;

  void validate() const;
};

enum class ChannelMode { gs, reinforce };
enum class MessageKind { symbol, sequence };

const char* to_string(ChannelMode mode);
const char* to_string(MessageKind kind);

// Sampled symbols, batch x max_len row-major. Positions after a sample's
// first eos hold eos padding and are ignored by every consumer.
struct DiscreteMessage {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> symbols;
  std::vector<std::size_t> lengths;
  Tensor log_prob;  // [batch], summed over emitted steps, eos included
  Tensor entropy;   // [batch], summed over emitted steps

  std::size_t at(std::size_t b, std::size_t t) const { return symbols[b * max_len + t]; }
};

// One relaxed symbol per step, each [batch x V] with rows summing to 1.
// `lengths` are for reporting: first step whose argmax is eos, else max_len.
struct RelaxedMessage {
  std::vector<Tensor> steps;
  double temperature = 1.0;
  std::vector<std::size_t> lengths;

  std::size_t batch() const { return steps.empty() ? 0 : steps.front().dim(0); }
  std::size_t max_len() const { return steps.size(); }
  // Per-step argmax symbols, batch x max_len row-major.
  std::vector<std::size_t> hard_symbols() const;
};

using Message = std::variant<DiscreteMessage, RelaxedMessage>;

std::size_t message_batch(const Message& m);
const std::vector<std::size_t>& message_lengths(const Message& m);
// Hard symbols of either variant, batch x max_len row-major.
std::vector<std::size_t> message_symbols(const Message& m);
std::size_t message_max_len(const Message& m);

// Per row of a batch x max_len grid: position of the first eos plus one, or
// max_len when there is none.
std::vector<std::size_t> message_lengths(std::span<const std::size_t> symbols,
                                         std::size_t batch, std::size_t max_len);

// g = -log(-log(u)), u ~ U(0, 1) exclusive.
Tensor sample_gumbel(const Shape& shape, Rng& rng);

// softmax((logits + g) / tau) along the last axis, reparameterized so the
// result is differentiable in `logits`. With `straight_through` the forward
// value is the one-hot argmax and the gradient is the relaxed sample's.
Tensor gs_sample(const Tensor& logits, double tau, Rng& rng, bool straight_through = false);
// Same, with caller-provided Gumbel draws of the logits' shape.
Tensor gs_relax(const Tensor& logits, const Tensor& gumbel, double tau,
                bool straight_through = false);

struct CategoricalSample {
  std::vector<std::size_t> index;
  Tensor log_prob;  // [batch]
};

// index ~ softmax(logits) per row, log_prob = log_softmax(logits)[index].
CategoricalSample categorical_sample(const Tensor& logits, Rng& rng);
// Row-wise argmax (lowest index on ties) with its log-probability.
CategoricalSample categorical_greedy(const Tensor& logits);
// Log-probabilities of given indices.
Tensor categorical_log_prob(const Tensor& logits, std::span<const std::size_t> index);
// Per-row entropy of softmax(logits), differentiable.
Tensor categorical_entropy(const Tensor& logits);

class RunningMeanBaseline {
 public:
  double value() const { return mean_; }
  std::uint64_t count() const { return count_; }
  void update(double batch_mean_loss) {
    ++count_;
    mean_ += (batch_mean_loss - mean_) / static_cast<double>(count_);
  }
  void restore(std::uint64_t count, double mean) {
    count_ = count;
    mean_ = mean;
  }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
};

// mean_b[(L_b - baseline) * logP_b + L_b], with L detached inside the
// score-function term so gradients through a differentiable loss still flow
// directly. The baseline is read first and then, when `update_baseline` is
// set, updated with the batch mean of L.
Tensor reinforce_surrogate(const Tensor& per_sample_loss, const Tensor& per_sample_log_prob,
                           RunningMeanBaseline& baseline, bool update_baseline = true);

}  // namespace egg
