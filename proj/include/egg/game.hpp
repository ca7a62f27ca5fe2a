#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "egg/agents.hpp"
#include "egg/batch.hpp"

namespace egg {

using MetricMap = std::map<std::string, double>;

struct LossResult {
  Tensor per_sample;                                // [batch]
  std::map<std::string, std::vector<double>> aux;   // per-sample auxiliary metrics
};

// User loss over (batch, message, receiver output o).
using LossFn = std::function<LossResult(const GameBatch&, const Message&, const Tensor&)>;

// Everything one batch went through, aligned on the batch dimension.
struct Interaction {
  Message message;
  Tensor receiver_output;
  std::vector<double> loss;
  std::map<std::string, std::vector<double>> aux;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> symbols;  // hard symbols, batch x max_len
  std::size_t max_len = 0;

  std::size_t size() const { return loss.size(); }
};

struct GameOptions {
  double sender_entropy_coeff = 0.0;
  double receiver_entropy_coeff = 0.0;
};

class Game {
 public:
  Game(std::unique_ptr<Sender> sender, std::unique_ptr<Receiver> receiver, LossFn loss,
       GameOptions options = {});

  const Sender& sender() const { return *sender_; }
  const Receiver& receiver() const { return *receiver_; }
  const LossFn& loss() const { return loss_; }
  const GameOptions& options() const { return options_; }
  ChannelMode mode() const { return sender_->mode(); }

  // Sender parameters followed by receiver parameters.
  ParamList parameters() const;

  RunningMeanBaseline& baseline() { return baseline_; }
  const RunningMeanBaseline& baseline() const { return baseline_; }

 private:
  std::unique_ptr<Sender> sender_;
  std::unique_ptr<Receiver> receiver_;
  LossFn loss_;
  GameOptions options_;
  RunningMeanBaseline baseline_;
};

struct ForwardResult {
  Tensor objective;  // scalar to minimize
  Interaction interaction;
};

// Sender -> channel -> Receiver -> loss. Under GS the objective is the mean
// per-sample loss; under REINFORCE it is the surrogate built from the summed
// sender (and receiver, if stochastic) log-probabilities minus the entropy
// bonuses. The baseline is updated only when `training`.
ForwardResult game_forward(Game& game, const GameBatch& batch, Rng& rng, bool training);

// Sample-weighted mean loss, auxiliary metrics and message length over a
// dataset, greedy decoding, nothing recorded and no state touched.
MetricMap evaluate(Game& game, const GameDataset& data, std::size_t batch_size, Rng& rng);

// Interactions (greedy decoding) for every item of a dataset, in order.
std::vector<Interaction> collect_interactions(Game& game, const GameDataset& data,
                                              std::size_t batch_size, Rng& rng);

}  // namespace egg
