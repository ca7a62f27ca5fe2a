#include "egg/runner.hpp"

#include <fstream>

#include "egg/datasets.hpp"
#include "egg/games.hpp"

namespace egg {

AgentSpec agent_spec(const RunConfig& cfg) {
  AgentSpec a;
  a.mode = cfg.mode == "gs" ? ChannelMode::gs : ChannelMode::reinforce;
  a.kind = cfg.message == "symbol" ? MessageKind::symbol : MessageKind::sequence;
  a.vocab.size = static_cast<std::size_t>(cfg.vocab_size);
  a.vocab.max_len = static_cast<std::size_t>(cfg.max_len);
  a.options.temperature = cfg.temperature;
  a.options.straight_through = cfg.straight_through;
  a.cell = parse_cell_kind(cfg.cell);
  a.sender_embed = static_cast<std::size_t>(cfg.embed);
  a.receiver_embed = static_cast<std::size_t>(cfg.embed);
  return a;
}

TrainerConfig trainer_config(const RunConfig& cfg) {
  const std::filesystem::path out(cfg.out_dir);
  TrainerConfig t;
  t.epochs = static_cast<std::size_t>(cfg.epochs);
  t.batch_size = static_cast<std::size_t>(cfg.batch_size);
  t.shuffle = cfg.shuffle;
  t.seed = cfg.seed;
  t.patience = static_cast<std::size_t>(cfg.patience);
  t.early_stop_metric = cfg.early_stop_metric;
  t.early_stop_maximize = cfg.early_stop_maximize;
  t.checkpoint_every = static_cast<std::size_t>(cfg.checkpoint_every);
  t.checkpoint_dir = out / "checkpoints";
  t.metrics_log = out / "metrics.jsonl";
  t.log_wall_time = cfg.log_wall_time;
  t.config_text = canonical_text(cfg);
  return t;
}

std::unique_ptr<Experiment> build_experiment(const RunConfig& cfg) {
  validate(cfg);
  auto ex = std::make_unique<Experiment>();
  ex->config = cfg;
  const AgentSpec agents = agent_spec(cfg);
  const auto hidden = static_cast<std::size_t>(cfg.hidden);
  Rng data_rng(derive_seed(cfg.seed, "data"));
  Rng params(derive_seed(cfg.seed, "params"));

  GameParts parts;
  if (cfg.game == "file") {
    FileGameSpec spec;
    spec.train_table = cfg.train_table;
    if (!cfg.val_table.empty()) spec.validation_table = cfg.val_table;
    spec.label_column = cfg.label_column;
    spec.task = parse_file_task(cfg.task);
    spec.hidden = hidden;
    spec.agents = agents;
    FileGameData data = load_file_game_data(spec);
    ex->train = data.train;
    ex->validation = data.validation ? data.validation : data.train;
    parts = build_file_game(spec, data, params);
  } else if (cfg.game == "reconstruction" && cfg.data == "idx") {
    IdxDataset idx = parse_idx(cfg.idx_images, cfg.idx_labels);
    Tensor images = idx.images();
    if (cfg.idx_limit > 0 && static_cast<std::size_t>(cfg.idx_limit) < idx.size()) {
      std::vector<std::size_t> first(static_cast<std::size_t>(cfg.idx_limit));
      for (std::size_t i = 0; i < first.size(); ++i) first[i] = i;
      images = gather_rows(images, first);
    }
    auto ds = std::make_shared<TensorDataset>(images, images);
    ex->train = ds;
    ex->validation = ds;
    parts = build_reconstruction_game({idx.dim(), std::pair{idx.rows, idx.cols}, hidden, agents},
                                      params);
  } else {
    std::optional<std::size_t> subset;
    if (cfg.n_items > 0) subset = static_cast<std::size_t>(cfg.n_items);
    const auto attrs = gen_attribute_dataset(static_cast<std::size_t>(cfg.n_attributes),
                                             static_cast<std::size_t>(cfg.n_values), data_rng,
                                             subset);
    const Tensor items = attrs.features();
    if (cfg.game == "reconstruction") {
      auto ds = std::make_shared<TensorDataset>(items, items);
      ex->train = ds;
      ex->validation = ds;
      parts = build_reconstruction_game(
          {attrs.dim(), std::pair{attrs.n_attributes, attrs.n_values}, hidden, agents}, params);
    } else {
      const auto k = static_cast<std::size_t>(cfg.candidates);
      auto ds = std::make_shared<DiscriminationDataset>(items, k);
      ex->train = ds;
      ex->validation = ds;
      parts = build_discrimination_game({k, attrs.dim(), hidden, agents}, params);
    }
  }

  GameOptions options;
  options.sender_entropy_coeff = cfg.sender_entropy_coeff;
  options.receiver_entropy_coeff = cfg.receiver_entropy_coeff;
  ex->game = std::make_unique<Game>(assemble(std::move(parts), options));
  if (cfg.optimizer == "adam") {
    ex->optimizer = std::make_unique<Adam>(ex->game->parameters(),
                                           AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps});
  } else {
    ex->optimizer = std::make_unique<Sgd>(ex->game->parameters(), cfg.lr);
  }
  return ex;
}

namespace {

nlohmann::json metrics_json(const MetricMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

RunResult run_training(const RunConfig& cfg, const std::optional<std::filesystem::path>& resume) {
  auto ex = build_experiment(cfg);
  const TrainerConfig tc = trainer_config(cfg);
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  if (tc.checkpoint_every > 0) std::filesystem::create_directories(tc.checkpoint_dir);
  write_json(out / "config.json", to_json(cfg));
  if (!resume) std::ofstream(tc.metrics_log, std::ios::trunc);

  Trainer trainer(*ex->game, *ex->optimizer, *ex->train, ex->validation.get(), tc);
  if (resume) trainer.load_checkpoint(*resume);

  RunResult result;
  try {
    result.history = trainer.train();
  } catch (const std::exception& e) {
    write_json(out / "summary.json", {{"status", "failed"}, {"error", e.what()},
                                      {"epoch", trainer.epoch()}});
    throw;
  }
  result.final_metrics = trainer.validate();
  trainer.save_checkpoint(out / "final.ckpt");

  nlohmann::json summary;
  summary["status"] = "ok";
  summary["epochs"] = trainer.epoch();
  summary["stopped_early"] = result.history.stopped_early;
  summary["final"] = metrics_json(result.final_metrics);
  if (!result.history.epochs.empty()) {
    summary["last_train"] = metrics_json(result.history.epochs.back().train);
  }
  write_json(out / "summary.json", summary);
  return result;
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  if (!ckpt.blobs.count("config")) throw CheckpointError("checkpoint carries no configuration");
  const auto j = nlohmann::json::parse(ckpt.blob("config"), nullptr, false);
  if (j.is_discarded()) throw CheckpointError("checkpoint configuration is not valid JSON");
  return config_from_json(j);
}

std::unique_ptr<Experiment> load_experiment(const std::filesystem::path& checkpoint,
                                            const std::optional<RunConfig>& cfg) {
  const Checkpoint ckpt = checkpoint_load(checkpoint);
  auto ex = build_experiment(cfg ? *cfg : checkpoint_config(ckpt));
  restore_params(ckpt, ex->game->parameters());
  return ex;
}

MetricMap evaluate_experiment(Experiment& ex) {
  Rng rng(derive_seed(ex.config.seed, "validation"));
  return evaluate(*ex.game, *ex.validation, static_cast<std::size_t>(ex.config.batch_size), rng);
}

}  // namespace egg
