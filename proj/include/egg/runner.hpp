#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "egg/analysis.hpp"
#include "egg/config.hpp"
#include "egg/game.hpp"
#include "egg/optim.hpp"
#include "egg/trainer.hpp"

namespace egg {

// A configured game with its data and optimizer, parameters drawn from the
// (seed, "params") stream.
struct Experiment {
  RunConfig config;
  std::shared_ptr<GameDataset> train;
  std::shared_ptr<GameDataset> validation;  // the training items when no split is given
  std::unique_ptr<Game> game;
  std::unique_ptr<Optimizer> optimizer;
};

std::unique_ptr<Experiment> build_experiment(const RunConfig& cfg);

AgentSpec agent_spec(const RunConfig& cfg);
TrainerConfig trainer_config(const RunConfig& cfg);

struct RunResult {
  History history;
  MetricMap final_metrics;  // validation metrics after the last epoch
};

// Trains one run. Artifacts, all under cfg.out_dir: config.json,
// metrics.jsonl, checkpoints/epoch_<n>.ckpt, final.ckpt, summary.json.
// With `resume`, training continues from that checkpoint and the metrics
// log is appended to.
RunResult run_training(const RunConfig& cfg,
                       const std::optional<std::filesystem::path>& resume = std::nullopt);

// The configuration stored in a checkpoint written by run_training.
RunConfig checkpoint_config(const Checkpoint& ckpt);

// Rebuilds the checkpoint's experiment (or `cfg`'s) and loads its parameters.
std::unique_ptr<Experiment> load_experiment(const std::filesystem::path& checkpoint,
                                            const std::optional<RunConfig>& cfg = std::nullopt);

MetricMap evaluate_experiment(Experiment& ex);

// Runs every child of the grid on up to spec.workers threads and writes
// <base out_dir>/results.tsv. Rows come back in child-index order.
std::vector<GridRow> run_grid(const GridSpec& spec);

}  // namespace egg
