#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "egg/agents.hpp"
#include "egg/batch.hpp"
#include "egg/game.hpp"
#include "egg/table.hpp"

namespace egg {

// ---- datasets --------------------------------------------------------------

// Row-aligned inputs and targets; a batch gathers rows of both.
class TensorDataset : public GameDataset {
 public:
  TensorDataset(Tensor inputs, Tensor targets);
  std::size_t size() const override { return inputs_.dim(0); }
  GameBatch batch(std::span<const std::size_t> items, Rng& rng) const override;
  const Tensor& inputs() const { return inputs_; }
  const Tensor& targets() const { return targets_; }

 private:
  Tensor inputs_;
  Tensor targets_;
};

// Each instance: the target item for the sender, and for the receiver the
// target among K-1 distractors drawn uniformly without replacement from the
// other items, in random order. Labels hold the target's position.
class DiscriminationDataset : public GameDataset {
 public:
  DiscriminationDataset(Tensor items, std::size_t candidates);
  std::size_t size() const override { return items_.dim(0); }
  std::size_t candidates() const { return k_; }
  GameBatch batch(std::span<const std::size_t> items, Rng& rng) const override;

 private:
  Tensor items_;
  std::size_t k_;
};

// Copies of the given rows of a tensor (no gradient).
Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows);

// ---- losses ----------------------------------------------------------------

// Per-sample mean binary cross-entropy between outputs in [0, 1] (clamped to
// [1e-12, 1 - 1e-12]) and targets in [0, 1]. aux: "acc" (argmax of output
// equals argmax of target) and "pixel_acc" (share of dimensions within 0.5).
LossResult reconstruction_loss(const Tensor& output, const Tensor& target);

// Per-sample cross-entropy of class scores [B x C] against integer labels.
// aux: "acc". A rank-1 output holds already chosen classes (a stochastic
// receiver); the loss is then the 0/1 error.
LossResult classification_loss(const Tensor& output, const Tensor& labels);

// ---- agent cores -----------------------------------------------------------

// x -> tanh(W1 x + b1) -> W2 . + b2
class MlpSenderCore : public SenderCore {
 public:
  MlpSenderCore(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);
  Tensor forward(const Tensor& x) const override;
  std::size_t output_size() const override { return out_.out_features(); }
  ParamList parameters() const override;

 private:
  Linear hidden_;
  Linear out_;
};

// Message representation -> tanh layer -> outputs, optionally squashed by a
// sigmoid (images); the receiver input is ignored.
class MlpReceiverCore : public ReceiverCore {
 public:
  MlpReceiverCore(std::size_t in, std::size_t hidden, std::size_t out, bool sigmoid_output,
                  std::optional<std::pair<std::size_t, std::size_t>> image, Rng& rng);
  Tensor forward(const Tensor& repr, const std::optional<Tensor>& receiver_input) const override;
  std::size_t input_size() const override { return hidden_.in_features(); }
  ParamList parameters() const override;
  std::optional<std::pair<std::size_t, std::size_t>> output_image() const override {
    return image_;
  }

 private:
  Linear hidden_;
  Linear out_;
  bool sigmoid_;
  std::optional<std::pair<std::size_t, std::size_t>> image_;
};

// Scores candidates [B x K x d] by the dot product of their linear embedding
// with a linear embedding of the message representation.
class DiscriminationReceiverCore : public ReceiverCore {
 public:
  DiscriminationReceiverCore(std::size_t in, std::size_t item_dim, std::size_t embed, Rng& rng);
  Tensor forward(const Tensor& repr, const std::optional<Tensor>& receiver_input) const override;
  std::size_t input_size() const override { return message_.in_features(); }
  ParamList parameters() const override;

 private:
  Linear message_;
  Linear candidate_;
};

// ---- builders --------------------------------------------------------------

struct GameParts {
  std::unique_ptr<Sender> sender;
  std::unique_ptr<Receiver> receiver;
  LossFn loss;
};

Game assemble(GameParts parts, GameOptions options = {});

// Width of the sender core output: the vocabulary size for single symbols,
// the cell hidden size for sequences.
std::size_t sender_core_output(const AgentSpec& agents, std::size_t hidden);

struct ReconstructionGameSpec {
  std::size_t dim = 0;
  std::optional<std::pair<std::size_t, std::size_t>> image;  // rows x cols == dim
  std::size_t hidden = 32;  // encoder/decoder width and cell hidden size
  AgentSpec agents;
};

struct DiscriminationGameSpec {
  std::size_t candidates = 2;
  std::size_t item_dim = 0;
  std::size_t hidden = 32;
  AgentSpec agents;
};

enum class FileTask { classification, reconstruction };
FileTask parse_file_task(const std::string& name);
const char* to_string(FileTask task);

// One table per split. For classification the label column holds class ids
// 0..C-1 and every other column is a feature; for reconstruction the
// features (every column but the label column, which may be absent) are
// also the targets and must lie in [0, 1].
struct FileGameSpec {
  std::filesystem::path train_table;
  std::optional<std::filesystem::path> validation_table;
  std::string label_column = "label";
  FileTask task = FileTask::classification;
  std::size_t hidden = 32;
  AgentSpec agents;
};

struct FileGameData {
  std::vector<std::string> features;
  std::size_t classes = 0;  // classification only
  std::shared_ptr<TensorDataset> train;
  std::shared_ptr<TensorDataset> validation;
};

GameParts build_reconstruction_game(const ReconstructionGameSpec& spec, Rng& rng);
GameParts build_discrimination_game(const DiscriminationGameSpec& spec, Rng& rng);

FileGameData load_file_game_data(const FileGameSpec& spec);
GameParts build_file_game(const FileGameSpec& spec, const FileGameData& data, Rng& rng);

}  // namespace egg
