#include "egg/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace egg {

Trainer::Trainer(Game& game, Optimizer& optimizer, const GameDataset& train,
                 const GameDataset* validation, TrainerConfig config)
    : game_(game),
      optimizer_(optimizer),
      train_(train),
      validation_(validation),
      config_(std::move(config)),
      loader_(train, config_.batch_size, config_.shuffle, config_.seed),
      sampling_(derive_seed(config_.seed, "sampling")) {
  if (train_.size() == 0) throw std::invalid_argument("training data is empty");
}

EpochRecord Trainer::train_epoch() {
  const auto started = std::chrono::steady_clock::now();
  const std::size_t epoch = epoch_ + 1;
  MetricMap totals;
  double count = 0.0;
  std::size_t batch_index = 0;
  for (const GameBatch& batch : loader_.batches(epoch)) {
    Tape::current().discard();
    optimizer_.zero_grad();
    ForwardResult r = game_forward(game_, batch, sampling_, true);
    const double objective = r.objective.item();
    bool finite = std::isfinite(objective);
    for (double l : r.interaction.loss) finite = finite && std::isfinite(l);
    if (!finite) {
      log_abort(epoch, batch_index, "non-finite loss");
      Tape::current().discard();
      throw NonFiniteLossError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index));
    }
    if (r.objective.recorded()) backward(r.objective);
    optimizer_.step();

    const Interaction& it = r.interaction;
    for (std::size_t i = 0; i < it.size(); ++i) {
      totals["loss"] += it.loss[i];
      totals["length"] += static_cast<double>(it.lengths[i]);
      for (const auto& [name, values] : it.aux) totals[name] += values[i];
    }
    count += static_cast<double>(it.size());
    ++batch_index;
  }
  for (auto& [name, v] : totals) v /= count;
  epoch_ = epoch;

  EpochRecord record;
  record.epoch = epoch;
  record.train = totals;
  const double train_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  log_record(epoch, "train", record.train, train_time);
  if (validation_) {
    const auto v_started = std::chrono::steady_clock::now();
    record.validation = validate();
    log_record(epoch, "validation", record.validation,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - v_started).count());
  }

  const MetricMap& monitored = validation_ ? record.validation : record.train;
  if (auto it = monitored.find(config_.early_stop_metric); it != monitored.end()) {
    const double value = it->second;
    const bool improved =
        !best_ || (config_.early_stop_maximize ? value > *best_ + 1e-12 : value < *best_ - 1e-12);
    if (improved) {
      best_ = value;
      bad_epochs_ = 0;
    } else {
      ++bad_epochs_;
    }
  } else if (config_.patience > 0) {
    throw std::invalid_argument("early-stopping metric '" + config_.early_stop_metric +
                                "' is not reported by this game");
  }

  if (config_.checkpoint_every > 0 && epoch % config_.checkpoint_every == 0) {
    save_checkpoint(config_.checkpoint_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"));
  }
  return record;
}

MetricMap Trainer::validate() const {
  if (!validation_) return {};
  // Fixed stream so every validation pass sees the same instances.
  Rng rng(derive_seed(config_.seed, "validation"));
  return evaluate(game_, *validation_, config_.batch_size, rng);
}

bool Trainer::should_stop() const {
  return config_.patience > 0 && bad_epochs_ >= config_.patience;
}

History Trainer::train() {
  History h;
  while (epoch_ < config_.epochs) {
    h.epochs.push_back(train_epoch());
    if (should_stop()) {
      h.stopped_early = epoch_ < config_.epochs;
      break;
    }
  }
  return h;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ckpt;
  store_params(ckpt, game_.parameters());
  for (const auto& s : optimizer_.export_state()) ckpt.tensors["optim." + s.name] = s.tensor.clone();
  ckpt.tensors["trainer.epoch"] = Tensor::scalar(static_cast<double>(epoch_));
  ckpt.tensors["trainer.bad_epochs"] = Tensor::scalar(static_cast<double>(bad_epochs_));
  if (best_) ckpt.tensors["trainer.best"] = Tensor::scalar(*best_);
  ckpt.tensors["baseline.count"] = Tensor::scalar(static_cast<double>(game_.baseline().count()));
  ckpt.tensors["baseline.mean"] = Tensor::scalar(game_.baseline().value());
  ckpt.blobs["rng.sampling"] = sampling_.state();
  ckpt.blobs["config"] = config_.config_text;
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  restore_params(ckpt, game_.parameters());
  std::map<std::string, Tensor> optim;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind("optim.", 0) == 0) optim.emplace(name.substr(6), t);
  }
  optimizer_.import_state(optim);
  epoch_ = static_cast<std::size_t>(ckpt.scalar("trainer.epoch"));
  bad_epochs_ = static_cast<std::size_t>(ckpt.scalar("trainer.bad_epochs"));
  best_.reset();
  if (ckpt.tensors.count("trainer.best")) best_ = ckpt.scalar("trainer.best");
  game_.baseline().restore(static_cast<std::uint64_t>(ckpt.scalar("baseline.count")),
                           ckpt.scalar("baseline.mean"));
  sampling_.set_state(ckpt.blob("rng.sampling"));
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  checkpoint_save(snapshot(), path);
}

void Trainer::load_checkpoint(const std::filesystem::path& path) { restore(checkpoint_load(path)); }

void Trainer::log_record(std::size_t epoch, const std::string& split, const MetricMap& metrics,
                         double wall_time) const {
  if (config_.metrics_log.empty()) return;
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["split"] = split;
  for (const auto& [name, v] : metrics) j[name] = v;
  if (config_.log_wall_time) j["wall_time"] = wall_time;
  std::ofstream out(config_.metrics_log, std::ios::app);
  out << j.dump() << '\n';
}

void Trainer::log_abort(std::size_t epoch, std::size_t batch, const std::string& reason) const {
  if (config_.metrics_log.empty()) return;
  nlohmann::ordered_json j;
  j["event"] = "abort";
  j["reason"] = reason;
  j["epoch"] = epoch;
  j["batch"] = batch;
  std::ofstream out(config_.metrics_log, std::ios::app);
  out << j.dump() << '\n';
}

}  // namespace egg
