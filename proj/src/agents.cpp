#include "egg/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace egg {

namespace {

Tensor one_hot(std::span<const std::size_t> index, std::size_t width) {
  Tensor t({index.size(), width});
  auto v = t.mutable_values();
  for (std::size_t b = 0; b < index.size(); ++b) v[b * width + index[b]] = 1.0;
  return t;
}

void check_vocab_width(const Tensor& scores, const VocabSpec& vocab, const char* who) {
  if (scores.rank() != 2 || scores.dim(1) != vocab.size) {
    throw ShapeError(std::string(who) + ": core produced " + shape_str(scores.shape()) +
                     " scores for a vocabulary of " + std::to_string(vocab.size));
  }
}

void check_symbols(std::span<const std::size_t> symbols, std::size_t vocab, const char* who) {
  for (std::size_t s : symbols) {
    if (s >= vocab) {
      throw std::invalid_argument(std::string(who) + ": symbol " + std::to_string(s) +
                                  " outside vocabulary of " + std::to_string(vocab));
    }
  }
}

class SymbolSender final : public Sender {
 public:
  SymbolSender(std::shared_ptr<SenderCore> core, const VocabSpec& vocab, ChannelMode mode,
               ChannelOptions options)
      : core_(std::move(core)), vocab_(vocab), mode_(mode), options_(options) {
    vocab_.validate();
    if (vocab_.max_len != 1) {
      throw std::invalid_argument("single-symbol sender needs max_len 1, got " +
                                  std::to_string(vocab_.max_len));
    }
    if (core_->output_size() != vocab_.size) {
      throw std::invalid_argument("single-symbol sender: core output size " +
                                  std::to_string(core_->output_size()) +
                                  " differs from vocabulary size " + std::to_string(vocab_.size));
    }
  }

  Message send(const Tensor& input, Rng& rng, bool training) const override {
    const Tensor scores = core_->forward(input);
    check_vocab_width(scores, vocab_, "symbol sender");
    const Tensor logits = log_softmax(scores, 1);
    const std::size_t B = logits.dim(0);
    if (mode_ == ChannelMode::gs) {
      RelaxedMessage msg;
      msg.temperature = options_.temperature;
      if (training) {
        msg.steps.push_back(gs_sample(logits, options_.temperature, rng, options_.straight_through));
      } else {
        msg.steps.push_back(one_hot(argmax_rows(logits), vocab_.size));
      }
      msg.lengths.assign(B, 1);
      return msg;
    }
    CategoricalSample s = training ? categorical_sample(logits, rng) : categorical_greedy(logits);
    DiscreteMessage msg;
    msg.batch = B;
    msg.max_len = 1;
    msg.symbols = s.index;
    msg.lengths.assign(B, 1);
    msg.log_prob = s.log_prob;
    msg.entropy = categorical_entropy(logits);
    return msg;
  }

  DiscreteMessage score(const Tensor& input, std::span<const std::size_t> symbols) const override {
    const Tensor scores = core_->forward(input);
    check_vocab_width(scores, vocab_, "symbol sender");
    check_symbols(symbols, vocab_.size, "symbol sender");
    const std::size_t B = scores.dim(0);
    if (symbols.size() != B) {
      throw ShapeError("symbol sender: " + std::to_string(symbols.size()) + " symbols for batch " +
                       std::to_string(B));
    }
    const Tensor logits = log_softmax(scores, 1);
    DiscreteMessage msg;
    msg.batch = B;
    msg.max_len = 1;
    msg.symbols.assign(symbols.begin(), symbols.end());
    msg.lengths.assign(B, 1);
    msg.log_prob = categorical_log_prob(logits, symbols);
    msg.entropy = categorical_entropy(logits);
    return msg;
  }

  ChannelMode mode() const override { return mode_; }
  MessageKind kind() const override { return MessageKind::symbol; }
  const VocabSpec& vocab() const override { return vocab_; }
  ParamList parameters() const override {
    ParamList out;
    append_params(out, "sender.core", core_->parameters());
    return out;
  }

 private:
  std::shared_ptr<SenderCore> core_;
  VocabSpec vocab_;
  ChannelMode mode_;
  ChannelOptions options_;
};

class SequenceSender final : public Sender {
 public:
  SequenceSender(std::shared_ptr<SenderCore> core, const VocabSpec& vocab, ChannelMode mode,
                 const SequenceSenderConfig& config, ChannelOptions options, Rng& rng)
      : core_(std::move(core)), vocab_(vocab), mode_(mode), options_(options) {
    vocab_.validate();
    const std::size_t hidden = core_->output_size();
    cell_ = RnnCell(config.cell, config.embed_dim, hidden, rng);
    embed_ = Embedding(vocab_.size, config.embed_dim, rng);
    to_vocab_ = Linear(hidden, vocab_.size, rng);
    start_ = init_params({{"start", {config.embed_dim}, config.embed_dim, ParamRole::weight}},
                         rng)[0]
                 .tensor;
  }

  Message send(const Tensor& input, Rng& rng, bool training) const override {
    UnrollMode m;
    m.channel = mode_;
    m.options = options_;
    m.training = training;
    return unroll_sender(core_->forward(input), parts(), vocab_, m, rng);
  }

  DiscreteMessage score(const Tensor& input, std::span<const std::size_t> symbols) const override {
    check_symbols(symbols, vocab_.size, "sequence sender");
    UnrollMode m;
    m.channel = ChannelMode::reinforce;
    m.forced = symbols;
    Rng unused(0);
    return std::get<DiscreteMessage>(unroll_sender(core_->forward(input), parts(), vocab_, m, unused));
  }

  ChannelMode mode() const override { return mode_; }
  MessageKind kind() const override { return MessageKind::sequence; }
  const VocabSpec& vocab() const override { return vocab_; }
  ParamList parameters() const override {
    ParamList out;
    append_params(out, "sender.core", core_->parameters());
    append_params(out, "sender.cell", cell_.parameters());
    append_params(out, "sender.embed", embed_.parameters());
    append_params(out, "sender.out", to_vocab_.parameters());
    out.push_back({"sender.start", start_});
    return out;
  }

 private:
  SequenceSenderParts parts() const { return {cell_, embed_, to_vocab_, start_}; }

  std::shared_ptr<SenderCore> core_;
  VocabSpec vocab_;
  ChannelMode mode_;
  ChannelOptions options_;
  RnnCell cell_;
  Embedding embed_;
  Linear to_vocab_;
  Tensor start_;
};

class SymbolReceiver final : public Receiver {
 public:
  SymbolReceiver(std::shared_ptr<ReceiverCore> core, const VocabSpec& vocab, ChannelMode mode,
                 Rng& rng)
      : core_(std::move(core)), vocab_(vocab), mode_(mode) {
    vocab_.validate();
    embed_ = Embedding(vocab_.size, core_->input_size(), rng);
  }

  ReceiverOutput receive(const Message& message, const std::optional<Tensor>& receiver_input,
                         Rng&, bool) const override {
    if (message_max_len(message) != 1) {
      throw std::invalid_argument("symbol receiver: message has " +
                                  std::to_string(message_max_len(message)) + " positions");
    }
    Tensor repr;
    if (const auto* d = std::get_if<DiscreteMessage>(&message)) {
      check_symbols(d->symbols, vocab_.size, "symbol receiver");
      repr = embed_.lookup(d->symbols);
    } else {
      const auto& r = std::get<RelaxedMessage>(message);
      if (r.steps[0].dim(1) != vocab_.size) {
        throw std::invalid_argument("symbol receiver: relaxed symbols over " +
                                    std::to_string(r.steps[0].dim(1)) +
                                    " entries, vocabulary is " + std::to_string(vocab_.size));
      }
      repr = embed_.mix(r.steps[0]);
    }
    return {core_->forward(repr, receiver_input), std::nullopt, std::nullopt};
  }

  ChannelMode mode() const override { return mode_; }
  MessageKind kind() const override { return MessageKind::symbol; }
  const VocabSpec& vocab() const override { return vocab_; }
  ParamList parameters() const override {
    ParamList out;
    append_params(out, "receiver.embed", embed_.parameters());
    append_params(out, "receiver.core", core_->parameters());
    return out;
  }
  std::optional<std::pair<std::size_t, std::size_t>> output_image() const override {
    return core_->output_image();
  }

 private:
  std::shared_ptr<ReceiverCore> core_;
  VocabSpec vocab_;
  ChannelMode mode_;
  Embedding embed_;
};

class SequenceReceiver final : public Receiver {
 public:
  SequenceReceiver(std::shared_ptr<ReceiverCore> core, const VocabSpec& vocab,
                   const SequenceReceiverConfig& config, ChannelMode mode, Rng& rng)
      : core_(std::move(core)), vocab_(vocab), mode_(mode) {
    vocab_.validate();
    embed_ = Embedding(vocab_.size, config.embed_dim, rng);
    cell_ = RnnCell(config.cell, config.embed_dim, core_->input_size(), rng);
  }

  ReceiverOutput receive(const Message& message, const std::optional<Tensor>& receiver_input,
                         Rng&, bool) const override {
    return {core_->forward(receive_sequence(message, cell_, embed_), receiver_input), std::nullopt,
            std::nullopt};
  }

  ChannelMode mode() const override { return mode_; }
  MessageKind kind() const override { return MessageKind::sequence; }
  const VocabSpec& vocab() const override { return vocab_; }
  ParamList parameters() const override {
    ParamList out;
    append_params(out, "receiver.embed", embed_.parameters());
    append_params(out, "receiver.cell", cell_.parameters());
    append_params(out, "receiver.core", core_->parameters());
    return out;
  }
  std::optional<std::pair<std::size_t, std::size_t>> output_image() const override {
    return core_->output_image();
  }

 private:
  std::shared_ptr<ReceiverCore> core_;
  VocabSpec vocab_;
  ChannelMode mode_;
  Embedding embed_;
  RnnCell cell_;
};

class StochasticReceiver final : public Receiver {
 public:
  explicit StochasticReceiver(std::unique_ptr<Receiver> inner) : inner_(std::move(inner)) {
    if (inner_->mode() != ChannelMode::reinforce) {
      throw std::invalid_argument("stochastic receivers are only defined for REINFORCE channels");
    }
  }

  ReceiverOutput receive(const Message& message, const std::optional<Tensor>& receiver_input,
                         Rng& rng, bool training) const override {
    const Tensor scores = inner_->receive(message, receiver_input, rng, training).output;
    const CategoricalSample s = training ? categorical_sample(scores, rng) : categorical_greedy(scores);
    std::vector<double> chosen(s.index.begin(), s.index.end());
    return {Tensor::vector(std::move(chosen)), s.log_prob, categorical_entropy(scores)};
  }

  ChannelMode mode() const override { return inner_->mode(); }
  MessageKind kind() const override { return inner_->kind(); }
  const VocabSpec& vocab() const override { return inner_->vocab(); }
  ParamList parameters() const override { return inner_->parameters(); }

 private:
  std::unique_ptr<Receiver> inner_;
};

}  // namespace

Message unroll_sender(const Tensor& initial_hidden, const SequenceSenderParts& parts,
                      const VocabSpec& vocab, const UnrollMode& mode, Rng& rng) {
  vocab.validate();
  if (initial_hidden.rank() != 2 || initial_hidden.dim(1) != parts.cell.hidden_size()) {
    throw ShapeError("unroll_sender: sender core output " + shape_str(initial_hidden.shape()) +
                     " does not match cell hidden size " +
                     std::to_string(parts.cell.hidden_size()));
  }
  if (parts.to_vocab.out_features() != vocab.size || parts.embed.vocab() != vocab.size) {
    throw std::invalid_argument("unroll_sender: sender layers disagree with vocabulary size " +
                                std::to_string(vocab.size));
  }
  const std::size_t B = initial_hidden.dim(0), L = vocab.max_len, V = vocab.size;
  if (mode.forced && mode.forced->size() != B * L) {
    throw ShapeError("unroll_sender: forced grid of " + std::to_string(mode.forced->size()) +
                     " symbols for " + std::to_string(B) + " x " + std::to_string(L));
  }

  RnnState state = parts.cell.state_from(initial_hidden);
  Tensor x = expand_rows(parts.start, B);

  if (mode.channel == ChannelMode::gs && !mode.forced) {
    RelaxedMessage msg;
    msg.temperature = mode.options.temperature;
    for (std::size_t t = 0; t < L; ++t) {
      state = parts.cell.step(x, state);
      const Tensor logits = log_softmax(parts.to_vocab.forward(state.h), 1);
      Tensor y = mode.training ? gs_sample(logits, mode.options.temperature, rng,
                                           mode.options.straight_through)
                               : one_hot(argmax_rows(logits), V);
      x = parts.embed.mix(y);
      msg.steps.push_back(std::move(y));
    }
    msg.lengths = message_lengths(msg.hard_symbols(), B, L);
    return msg;
  }

  DiscreteMessage msg;
  msg.batch = B;
  msg.max_len = L;
  msg.symbols.assign(B * L, VocabSpec::eos);
  msg.log_prob = Tensor({B});
  msg.entropy = Tensor({B});
  std::vector<bool> alive(B, true);
  std::vector<std::size_t> idx(B);

  for (std::size_t t = 0; t < L; ++t) {
    if (std::none_of(alive.begin(), alive.end(), [](bool a) { return a; })) break;
    state = parts.cell.step(x, state);
    const Tensor scores = parts.to_vocab.forward(state.h);
    Tensor lp;
    if (mode.forced) {
      for (std::size_t b = 0; b < B; ++b) idx[b] = (*mode.forced)[b * L + t];
      lp = categorical_log_prob(scores, idx);
    } else {
      CategoricalSample s = mode.training ? categorical_sample(scores, rng) : categorical_greedy(scores);
      idx = std::move(s.index);
      lp = s.log_prob;
    }
    msg.log_prob = msg.log_prob + keep_where(lp, alive);
    msg.entropy = msg.entropy + keep_where(categorical_entropy(scores), alive);
    for (std::size_t b = 0; b < B; ++b) {
      if (alive[b]) msg.symbols[b * L + t] = idx[b];
    }
    x = parts.embed.lookup(idx);
    for (std::size_t b = 0; b < B; ++b) {
      if (idx[b] == VocabSpec::eos) alive[b] = false;
    }
  }
  msg.lengths = message_lengths(msg.symbols, B, L);
  return msg;
}

Tensor receive_sequence(const Message& message, const RnnCell& cell, const Embedding& embed) {
  const std::size_t B = message_batch(message);
  const auto& lengths = message_lengths(message);
  const std::size_t steps = lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end());
  if (steps == 0) throw std::invalid_argument("receive_sequence: empty message");

  RnnState state = cell.zero_state(B);
  std::vector<Tensor> hidden;
  hidden.reserve(steps);
  if (const auto* d = std::get_if<DiscreteMessage>(&message)) {
    check_symbols(d->symbols, embed.vocab(), "receive_sequence");
    std::vector<std::size_t> column(B);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t b = 0; b < B; ++b) column[b] = d->at(b, t);
      state = cell.step(embed.lookup(column), state);
      hidden.push_back(state.h);
    }
  } else {
    const auto& r = std::get<RelaxedMessage>(message);
    for (std::size_t t = 0; t < steps; ++t) {
      if (r.steps[t].dim(1) != embed.vocab()) {
        throw std::invalid_argument("receive_sequence: relaxed symbols over " +
                                    std::to_string(r.steps[t].dim(1)) +
                                    " entries, vocabulary is " + std::to_string(embed.vocab()));
      }
      state = cell.step(embed.mix(r.steps[t]), state);
      hidden.push_back(state.h);
    }
  }
  std::vector<std::size_t> which(B);
  for (std::size_t b = 0; b < B; ++b) which[b] = lengths[b] - 1;
  return select_rows(hidden, which);
}

std::unique_ptr<Sender> wrap_symbol_gs(std::shared_ptr<SenderCore> core, const VocabSpec& vocab,
                                       ChannelOptions options) {
  return std::make_unique<SymbolSender>(std::move(core), vocab, ChannelMode::gs, options);
}

std::unique_ptr<Sender> wrap_symbol_reinforce(std::shared_ptr<SenderCore> core,
                                              const VocabSpec& vocab) {
  return std::make_unique<SymbolSender>(std::move(core), vocab, ChannelMode::reinforce,
                                        ChannelOptions{});
}

std::unique_ptr<Sender> wrap_sequence_gs(std::shared_ptr<SenderCore> core, const VocabSpec& vocab,
                                         const SequenceSenderConfig& config, ChannelOptions options,
                                         Rng& rng) {
  return std::make_unique<SequenceSender>(std::move(core), vocab, ChannelMode::gs, config, options,
                                          rng);
}

std::unique_ptr<Sender> wrap_sequence_reinforce(std::shared_ptr<SenderCore> core,
                                                const VocabSpec& vocab,
                                                const SequenceSenderConfig& config, Rng& rng) {
  return std::make_unique<SequenceSender>(std::move(core), vocab, ChannelMode::reinforce, config,
                                          ChannelOptions{}, rng);
}

std::unique_ptr<Receiver> wrap_symbol_receiver(std::shared_ptr<ReceiverCore> core,
                                               const VocabSpec& vocab, ChannelMode mode, Rng& rng) {
  return std::make_unique<SymbolReceiver>(std::move(core), vocab, mode, rng);
}

std::unique_ptr<Receiver> wrap_sequence_receiver(std::shared_ptr<ReceiverCore> core,
                                                 const VocabSpec& vocab,
                                                 const SequenceReceiverConfig& config,
                                                 ChannelMode mode, Rng& rng) {
  return std::make_unique<SequenceReceiver>(std::move(core), vocab, config, mode, rng);
}

std::unique_ptr<Receiver> make_stochastic_receiver(std::unique_ptr<Receiver> inner) {
  return std::make_unique<StochasticReceiver>(std::move(inner));
}

std::pair<std::unique_ptr<Sender>, std::unique_ptr<Receiver>> wrap_agents(
    std::shared_ptr<SenderCore> sender_core, std::shared_ptr<ReceiverCore> receiver_core,
    const AgentSpec& spec, Rng& rng) {
  std::unique_ptr<Sender> sender;
  std::unique_ptr<Receiver> receiver;
  if (spec.kind == MessageKind::symbol) {
    sender = spec.mode == ChannelMode::gs ? wrap_symbol_gs(sender_core, spec.vocab, spec.options)
                                          : wrap_symbol_reinforce(sender_core, spec.vocab);
    receiver = wrap_symbol_receiver(receiver_core, spec.vocab, spec.mode, rng);
  } else {
    const SequenceSenderConfig sc{spec.cell, spec.sender_embed};
    sender = spec.mode == ChannelMode::gs
                 ? wrap_sequence_gs(sender_core, spec.vocab, sc, spec.options, rng)
                 : wrap_sequence_reinforce(sender_core, spec.vocab, sc, rng);
    receiver = wrap_sequence_receiver(receiver_core, spec.vocab,
                                      SequenceReceiverConfig{spec.cell, spec.receiver_embed},
                                      spec.mode, rng);
  }
  return {std::move(sender), std::move(receiver)};
}

}  // namespace egg
