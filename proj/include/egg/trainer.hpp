#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egg/checkpoint.hpp"
#include "egg/datasets.hpp"
#include "egg/game.hpp"
#include "egg/optim.hpp"

namespace egg {

struct TrainerConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  bool shuffle = true;
  std::uint64_t seed = 0;
  // Early stopping on the validation split (training split when there is
  // none). Improvement is a strict change beyond 1e-12 in the preferred
  // direction; 0 disables.
  std::size_t patience = 0;
  std::string early_stop_metric = "loss";
  bool early_stop_maximize = false;
  // Checkpoint every N epochs into checkpoint_dir; 0 disables.
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;
  // Line-delimited JSON records, appended; empty disables.
  std::filesystem::path metrics_log;
  bool log_wall_time = true;
  // Opaque text stored alongside every checkpoint (the run configuration).
  std::string config_text;
};

struct EpochRecord {
  std::size_t epoch = 0;
  MetricMap train;
  MetricMap validation;
};

struct History {
  std::vector<EpochRecord> epochs;
  bool stopped_early = false;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Named RNG streams of a run, all derived from the master seed.
struct RunStreams {
  explicit RunStreams(std::uint64_t seed)
      : params(derive_seed(seed, "params")), sampling(derive_seed(seed, "sampling")) {}
  Rng params;
  Rng sampling;
};

class Trainer {
 public:
  Trainer(Game& game, Optimizer& optimizer, const GameDataset& train,
          const GameDataset* validation, TrainerConfig config);

  // Runs epochs epoch()+1 .. config.epochs, or until early stopping.
  History train();
  EpochRecord train_epoch();
  MetricMap validate() const;

  std::size_t epoch() const { return epoch_; }
  bool should_stop() const;

  Checkpoint snapshot() const;
  void restore(const Checkpoint& ckpt);
  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  void log_record(std::size_t epoch, const std::string& split, const MetricMap& metrics,
                  double wall_time) const;
  void log_abort(std::size_t epoch, std::size_t batch, const std::string& reason) const;

  Game& game_;
  Optimizer& optimizer_;
  const GameDataset& train_;
  const GameDataset* validation_;
  TrainerConfig config_;
  BatchLoader loader_;
  Rng sampling_;
  std::size_t epoch_ = 0;
  std::optional<double> best_;
  std::size_t bad_epochs_ = 0;
};

}  // namespace egg
