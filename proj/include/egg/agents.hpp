#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>

#include "egg/channel.hpp"
#include "egg/nn.hpp"

namespace egg {

// The user-implemented part of a Sender: consumes the sender input and
// produces a batch x output_size() tensor. Its meaning depends on the
// wrapper: symbol scores for single-symbol channels, the initial hidden
// state for sequence channels.
class SenderCore {
 public:
  virtual ~SenderCore() = default;
  virtual Tensor forward(const Tensor& sender_input) const = 0;
  virtual std::size_t output_size() const = 0;
  virtual ParamList parameters() const = 0;
};

// The user-implemented part of a Receiver: consumes a message
// representation (batch x input_size()) and the optional receiver input.
class ReceiverCore {
 public:
  virtual ~ReceiverCore() = default;
  virtual Tensor forward(const Tensor& message_repr,
                         const std::optional<Tensor>& receiver_input) const = 0;
  virtual std::size_t input_size() const = 0;
  virtual ParamList parameters() const = 0;
  // (rows, cols) when each output row is an image of that shape.
  virtual std::optional<std::pair<std::size_t, std::size_t>> output_image() const {
    return std::nullopt;
  }
};

struct ChannelOptions {
  double temperature = 1.0;
  bool straight_through = false;
};

class Sender {
 public:
  virtual ~Sender() = default;

  // Training draws stochastic messages; otherwise decoding is greedy (argmax)
  // and GS messages are hard one-hot.
  virtual Message send(const Tensor& sender_input, Rng& rng, bool training) const = 0;

  // Teacher-forced log-probabilities and entropies of a given symbol grid
  // (batch x max_len). Positions after a row's first eos are ignored.
  virtual DiscreteMessage score(const Tensor& sender_input,
                                std::span<const std::size_t> symbols) const = 0;

  virtual ChannelMode mode() const = 0;
  virtual MessageKind kind() const = 0;
  virtual const VocabSpec& vocab() const = 0;
  virtual ParamList parameters() const = 0;
};

struct ReceiverOutput {
  Tensor output;
  std::optional<Tensor> log_prob;  // stochastic receivers only
  std::optional<Tensor> entropy;
};

class Receiver {
 public:
  virtual ~Receiver() = default;
  virtual ReceiverOutput receive(const Message& message,
                                 const std::optional<Tensor>& receiver_input, Rng& rng,
                                 bool training) const = 0;
  virtual ChannelMode mode() const = 0;
  virtual MessageKind kind() const = 0;
  virtual const VocabSpec& vocab() const = 0;
  virtual ParamList parameters() const = 0;
  virtual std::optional<std::pair<std::size_t, std::size_t>> output_image() const {
    return std::nullopt;
  }
};

// Pieces of a sequence sender after the user core.
struct SequenceSenderParts {
  const RnnCell& cell;
  const Embedding& embed;    // symbol -> next cell input
  const Linear& to_vocab;    // hidden -> symbol scores
  const Tensor& start;       // [embed_dim] input of the first step
};

struct UnrollMode {
  ChannelMode channel = ChannelMode::reinforce;
  ChannelOptions options;
  bool training = true;
  // Teacher forcing: emit these symbols (batch x max_len) instead of sampling.
  std::optional<std::span<const std::size_t>> forced;
};

// Runs the sender cell from `initial_hidden`: hidden -> scores -> symbol
// (relaxed or sampled) -> embedding -> next input, for max_len steps.
// Discrete messages stop per sample at eos; later log-probabilities,
// entropies and symbols are masked to zero/eos.
Message unroll_sender(const Tensor& initial_hidden, const SequenceSenderParts& parts,
                      const VocabSpec& vocab, const UnrollMode& mode, Rng& rng);

// Runs the receiver cell over the embedded message (relaxed symbols use the
// probability-weighted mixture of embedding rows) from a zero state and
// returns each sample's hidden state at its effective length.
Tensor receive_sequence(const Message& message, const RnnCell& cell, const Embedding& embed);

std::unique_ptr<Sender> wrap_symbol_gs(std::shared_ptr<SenderCore> core, const VocabSpec& vocab,
                                       ChannelOptions options = {});
std::unique_ptr<Sender> wrap_symbol_reinforce(std::shared_ptr<SenderCore> core,
                                              const VocabSpec& vocab);

struct SequenceSenderConfig {
  CellKind cell = CellKind::lstm;
  std::size_t embed_dim = 10;
};

std::unique_ptr<Sender> wrap_sequence_gs(std::shared_ptr<SenderCore> core, const VocabSpec& vocab,
                                         const SequenceSenderConfig& config, ChannelOptions options,
                                         Rng& rng);
std::unique_ptr<Sender> wrap_sequence_reinforce(std::shared_ptr<SenderCore> core,
                                                const VocabSpec& vocab,
                                                const SequenceSenderConfig& config, Rng& rng);

// Single-symbol receivers embed the symbol (or the relaxed mixture) into
// core->input_size() dimensions.
std::unique_ptr<Receiver> wrap_symbol_receiver(std::shared_ptr<ReceiverCore> core,
                                               const VocabSpec& vocab, ChannelMode mode, Rng& rng);

struct SequenceReceiverConfig {
  CellKind cell = CellKind::lstm;
  std::size_t embed_dim = 10;
};

// Sequence receivers feed the last hidden state (size core->input_size()).
std::unique_ptr<Receiver> wrap_sequence_receiver(std::shared_ptr<ReceiverCore> core,
                                                 const VocabSpec& vocab,
                                                 const SequenceReceiverConfig& config,
                                                 ChannelMode mode, Rng& rng);

// Makes a deterministic REINFORCE receiver stochastic: its output is read as
// class scores, a class is sampled (greedy outside training), and the output
// becomes the chosen class index with its log-probability.
std::unique_ptr<Receiver> make_stochastic_receiver(std::unique_ptr<Receiver> inner);

struct AgentSpec {
  ChannelMode mode = ChannelMode::gs;
  MessageKind kind = MessageKind::symbol;
  VocabSpec vocab;
  ChannelOptions options;
  CellKind cell = CellKind::lstm;
  std::size_t sender_embed = 10;
  std::size_t receiver_embed = 10;
};

// The same two cores under any of the four channel wrappers.
std::pair<std::unique_ptr<Sender>, std::unique_ptr<Receiver>> wrap_agents(
    std::shared_ptr<SenderCore> sender_core, std::shared_ptr<ReceiverCore> receiver_core,
    const AgentSpec& spec, Rng& rng);

}  // namespace egg
