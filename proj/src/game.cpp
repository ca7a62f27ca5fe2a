#include "egg/game.hpp"

#include <cmath>
#include <stdexcept>

namespace egg {

void GameBatch::validate() const {
  const std::size_t n = size();
  if (n == 0) throw ShapeError("GameBatch: empty sender input");
  if (labels.rank() == 0 || labels.dim(0) != n) {
    throw ShapeError("GameBatch: labels " + shape_str(labels.shape()) + " do not match batch of " +
                     std::to_string(n));
  }
  if (receiver_input && (receiver_input->rank() == 0 || receiver_input->dim(0) != n)) {
    throw ShapeError("GameBatch: receiver input " + shape_str(receiver_input->shape()) +
                     " does not match batch of " + std::to_string(n));
  }
}

Game::Game(std::unique_ptr<Sender> sender, std::unique_ptr<Receiver> receiver, LossFn loss,
           GameOptions options)
    : sender_(std::move(sender)),
      receiver_(std::move(receiver)),
      loss_(std::move(loss)),
      options_(options) {
  if (sender_->mode() != receiver_->mode()) {
    throw std::invalid_argument(std::string("channel mode mismatch: sender is ") +
                                to_string(sender_->mode()) + ", receiver is " +
                                to_string(receiver_->mode()));
  }
  if (sender_->kind() != receiver_->kind()) {
    throw std::invalid_argument(std::string("message kind mismatch: sender is ") +
                                to_string(sender_->kind()) + ", receiver is " +
                                to_string(receiver_->kind()));
  }
  if (sender_->vocab().size != receiver_->vocab().size ||
      sender_->vocab().max_len != receiver_->vocab().max_len) {
    throw std::invalid_argument("sender and receiver vocabularies differ");
  }
}

ParamList Game::parameters() const {
  ParamList out = sender_->parameters();
  for (auto& p : receiver_->parameters()) out.push_back(p);
  return out;
}

ForwardResult game_forward(Game& game, const GameBatch& batch, Rng& rng, bool training) {
  batch.validate();
  Message message = game.sender().send(batch.sender_input, rng, training);
  ReceiverOutput out = game.receiver().receive(message, batch.receiver_input, rng, training);
  LossResult loss = game.loss()(batch, message, out.output);
  const std::size_t n = batch.size();
  if (loss.per_sample.rank() != 1 || loss.per_sample.dim(0) != n) {
    throw ShapeError("loss returned " + shape_str(loss.per_sample.shape()) + " for a batch of " +
                     std::to_string(n));
  }

  Tensor objective;
  if (game.mode() == ChannelMode::gs) {
    objective = mean(loss.per_sample);
  } else {
    const auto& msg = std::get<DiscreteMessage>(message);
    Tensor log_prob = msg.log_prob;
    if (out.log_prob) log_prob = log_prob + *out.log_prob;
    objective = reinforce_surrogate(loss.per_sample, log_prob, game.baseline(), training);
    const auto& opt = game.options();
    if (opt.sender_entropy_coeff != 0.0) {
      objective = objective - scale(mean(msg.entropy), opt.sender_entropy_coeff);
    }
    if (opt.receiver_entropy_coeff != 0.0 && out.entropy) {
      objective = objective - scale(mean(*out.entropy), opt.receiver_entropy_coeff);
    }
  }

  Interaction it;
  it.loss.assign(loss.per_sample.values().begin(), loss.per_sample.values().end());
  it.aux = std::move(loss.aux);
  it.lengths = message_lengths(message);
  it.symbols = message_symbols(message);
  it.max_len = message_max_len(message);
  it.receiver_output = out.output;
  it.message = std::move(message);
  return {objective, std::move(it)};
}

std::vector<Interaction> collect_interactions(Game& game, const GameDataset& data,
                                              std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw std::invalid_argument("collect_interactions: batch size is zero");
  NoGradGuard no_grad;
  std::vector<Interaction> out;
  std::vector<std::size_t> items;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    items.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) items.push_back(i);
    out.push_back(game_forward(game, data.batch(items, rng), rng, false).interaction);
  }
  return out;
}

MetricMap evaluate(Game& game, const GameDataset& data, std::size_t batch_size, Rng& rng) {
  const auto interactions = collect_interactions(game, data, batch_size, rng);
  MetricMap totals;
  double count = 0.0;
  for (const auto& it : interactions) {
    for (std::size_t i = 0; i < it.size(); ++i) {
      totals["loss"] += it.loss[i];
      totals["length"] += static_cast<double>(it.lengths[i]);
      for (const auto& [name, values] : it.aux) totals[name] += values[i];
    }
    count += static_cast<double>(it.size());
  }
  if (count > 0) {
    for (auto& [name, v] : totals) v /= count;
  }
  return totals;
}

}  // namespace egg
