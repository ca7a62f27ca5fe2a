#include "egg/games.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace egg {

Tensor gather_rows(const Tensor& t, std::span<const std::size_t> rows) {
  if (t.rank() == 0) throw ShapeError("gather_rows: scalar tensor");
  Shape shape = t.shape();
  const std::size_t n = shape[0];
  const std::size_t width = t.numel() / n;
  shape[0] = rows.size();
  std::vector<double> out(rows.size() * width);
  const auto v = t.values();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n) {
      throw std::out_of_range("gather_rows: row " + std::to_string(rows[i]) + " of " +
                              std::to_string(n));
    }
    std::copy_n(v.begin() + rows[i] * width, width, out.begin() + i * width);
  }
  return Tensor(shape, std::move(out));
}

TensorDataset::TensorDataset(Tensor inputs, Tensor targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.rank() == 0 || targets_.rank() == 0 || inputs_.dim(0) != targets_.dim(0)) {
    throw ShapeError("TensorDataset: inputs " + shape_str(inputs_.shape()) + " and targets " +
                     shape_str(targets_.shape()) + " are not row-aligned");
  }
}

GameBatch TensorDataset::batch(std::span<const std::size_t> items, Rng&) const {
  return {gather_rows(inputs_, items), std::nullopt, gather_rows(targets_, items)};
}

DiscriminationDataset::DiscriminationDataset(Tensor items, std::size_t candidates)
    : items_(std::move(items)), k_(candidates) {
  if (k_ < 2) {
    throw std::invalid_argument("discrimination needs at least 2 candidates, got " +
                                std::to_string(k_));
  }
  if (items_.rank() != 2) throw ShapeError("DiscriminationDataset: items must be N x d");
  if (items_.dim(0) < k_) {
    throw std::invalid_argument("discrimination with " + std::to_string(k_) +
                                " candidates needs at least that many items, got " +
                                std::to_string(items_.dim(0)));
  }
}

GameBatch DiscriminationDataset::batch(std::span<const std::size_t> items, Rng& rng) const {
  const std::size_t n = items_.dim(0), d = items_.dim(1), B = items.size();
  std::vector<double> candidates(B * k_ * d);
  std::vector<double> labels(B);
  const auto v = items_.values();
  std::vector<std::size_t> chosen(k_);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t target = items[b];
    // Floyd's algorithm over the n - 1 non-target items.
    std::vector<std::size_t> picks;
    for (std::size_t j = n - 1 - (k_ - 1); j < n - 1; ++j) {
      const std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
      picks.push_back(std::find(picks.begin(), picks.end(), t) == picks.end() ? t : j);
    }
    chosen[0] = target;
    for (std::size_t i = 0; i < k_ - 1; ++i) chosen[i + 1] = picks[i] < target ? picks[i] : picks[i] + 1;
    rng.shuffle(chosen);
    for (std::size_t k = 0; k < k_; ++k) {
      if (chosen[k] == target) labels[b] = static_cast<double>(k);
      std::copy_n(v.begin() + chosen[k] * d, d, candidates.begin() + (b * k_ + k) * d);
    }
  }
  return {gather_rows(items_, items), Tensor({B, k_, d}, std::move(candidates)),
          Tensor::vector(std::move(labels))};
}

namespace {

std::vector<std::size_t> label_indices(const Tensor& labels, std::size_t classes) {
  std::vector<std::size_t> out;
  out.reserve(labels.numel());
  for (double v : labels.values()) {
    if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(classes)) {
      throw std::invalid_argument("label " + std::to_string(v) + " is not a class in [0, " +
                                  std::to_string(classes) + ")");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

}  // namespace

LossResult reconstruction_loss(const Tensor& output, const Tensor& target) {
  if (output.shape() != target.shape() || output.rank() != 2) {
    throw ShapeError("reconstruction_loss: output " + shape_str(output.shape()) + " vs target " +
                     shape_str(target.shape()));
  }
  constexpr double floor = 1e-12;
  const Tensor p = clamp(output, floor, 1.0 - floor);
  const Tensor t = target.detach();
  const Tensor one = Tensor::full(output.shape(), 1.0);
  const Tensor bce = neg(t * log(p) + (one - t) * log(one - p));

  const std::size_t B = output.dim(0), D = output.dim(1);
  std::vector<double> acc(B), pixel(B);
  const auto predicted = argmax_rows(output);
  const auto wanted = argmax_rows(target);
  const auto o = output.values(), tv = target.values();
  for (std::size_t b = 0; b < B; ++b) {
    acc[b] = predicted[b] == wanted[b] ? 1.0 : 0.0;
    std::size_t close = 0;
    for (std::size_t j = 0; j < D; ++j) close += std::abs(o[b * D + j] - tv[b * D + j]) < 0.5;
    pixel[b] = static_cast<double>(close) / static_cast<double>(D);
  }
  return {mean(bce, 1), {{"acc", std::move(acc)}, {"pixel_acc", std::move(pixel)}}};
}

LossResult classification_loss(const Tensor& output, const Tensor& labels) {
  const std::size_t B = labels.numel();
  if (output.rank() == 1) {
    if (output.dim(0) != B) throw ShapeError("classification_loss: batch mismatch");
    std::vector<double> err(B), acc(B);
    for (std::size_t b = 0; b < B; ++b) {
      acc[b] = output[b] == labels[b] ? 1.0 : 0.0;
      err[b] = 1.0 - acc[b];
    }
    return {Tensor::vector(std::move(err)), {{"acc", std::move(acc)}}};
  }
  if (output.rank() != 2 || output.dim(0) != B) {
    throw ShapeError("classification_loss: scores " + shape_str(output.shape()) + " for " +
                     std::to_string(B) + " labels");
  }
  const auto idx = label_indices(labels, output.dim(1));
  const auto predicted = argmax_rows(output);
  std::vector<double> acc(B);
  for (std::size_t b = 0; b < B; ++b) acc[b] = predicted[b] == idx[b] ? 1.0 : 0.0;
  return {neg(pick(log_softmax(output, 1), idx)), {{"acc", std::move(acc)}}};
}

MlpSenderCore::MlpSenderCore(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng)
    : hidden_(in, hidden, rng), out_(hidden, out, rng) {}

Tensor MlpSenderCore::forward(const Tensor& x) const {
  return out_.forward(tanh(hidden_.forward(x)));
}

ParamList MlpSenderCore::parameters() const {
  ParamList out;
  append_params(out, "hidden", hidden_.parameters());
  append_params(out, "out", out_.parameters());
  return out;
}

MlpReceiverCore::MlpReceiverCore(std::size_t in, std::size_t hidden, std::size_t out,
                                 bool sigmoid_output,
                                 std::optional<std::pair<std::size_t, std::size_t>> image, Rng& rng)
    : hidden_(in, hidden, rng), out_(hidden, out, rng), sigmoid_(sigmoid_output), image_(image) {
  if (image_ && image_->first * image_->second != out) {
    throw std::invalid_argument("image shape " + std::to_string(image_->first) + "x" +
                                std::to_string(image_->second) + " does not cover " +
                                std::to_string(out) + " outputs");
  }
}

Tensor MlpReceiverCore::forward(const Tensor& repr, const std::optional<Tensor>&) const {
  const Tensor y = out_.forward(tanh(hidden_.forward(repr)));
  return sigmoid_ ? sigmoid(y) : y;
}

ParamList MlpReceiverCore::parameters() const {
  ParamList out;
  append_params(out, "hidden", hidden_.parameters());
  append_params(out, "out", out_.parameters());
  return out;
}

DiscriminationReceiverCore::DiscriminationReceiverCore(std::size_t in, std::size_t item_dim,
                                                       std::size_t embed, Rng& rng)
    : message_(in, embed, rng), candidate_(item_dim, embed, rng) {}

Tensor DiscriminationReceiverCore::forward(const Tensor& repr,
                                           const std::optional<Tensor>& receiver_input) const {
  if (!receiver_input || receiver_input->rank() != 3) {
    throw ShapeError("discrimination receiver needs candidates batch x K x d");
  }
  const Tensor& c = *receiver_input;
  const std::size_t B = c.dim(0), K = c.dim(1), d = c.dim(2);
  const Tensor embedded = reshape(candidate_.forward(reshape(c, {B * K, d})),
                                  {B, K, candidate_.out_features()});
  return batched_matvec(embedded, message_.forward(repr));
}

ParamList DiscriminationReceiverCore::parameters() const {
  ParamList out;
  append_params(out, "message", message_.parameters());
  append_params(out, "candidate", candidate_.parameters());
  return out;
}

Game assemble(GameParts parts, GameOptions options) {
  return Game(std::move(parts.sender), std::move(parts.receiver), std::move(parts.loss), options);
}

std::size_t sender_core_output(const AgentSpec& agents, std::size_t hidden) {
  return agents.kind == MessageKind::symbol ? agents.vocab.size : hidden;
}

namespace {

void check_positive(std::size_t v, const char* what) {
  if (v == 0) throw std::invalid_argument(std::string(what) + " must be positive");
}

GameParts wrap(std::shared_ptr<SenderCore> s, std::shared_ptr<ReceiverCore> r,
               const AgentSpec& agents, LossFn loss, Rng& rng) {
  auto [sender, receiver] = wrap_agents(std::move(s), std::move(r), agents, rng);
  return {std::move(sender), std::move(receiver), std::move(loss)};
}

}  // namespace

GameParts build_reconstruction_game(const ReconstructionGameSpec& spec, Rng& rng) {
  check_positive(spec.dim, "reconstruction input dimension");
  check_positive(spec.hidden, "hidden size");
  spec.agents.vocab.validate();
  auto sender = std::make_shared<MlpSenderCore>(spec.dim, spec.hidden,
                                                sender_core_output(spec.agents, spec.hidden), rng);
  auto receiver =
      std::make_shared<MlpReceiverCore>(spec.hidden, spec.hidden, spec.dim, true, spec.image, rng);
  return wrap(sender, receiver, spec.agents,
              [](const GameBatch& b, const Message&, const Tensor& out) {
                return reconstruction_loss(out, b.labels);
              },
              rng);
}

GameParts build_discrimination_game(const DiscriminationGameSpec& spec, Rng& rng) {
  if (spec.candidates < 2) {
    throw std::invalid_argument("discrimination needs at least 2 candidates, got " +
                                std::to_string(spec.candidates));
  }
  check_positive(spec.item_dim, "item dimension");
  check_positive(spec.hidden, "hidden size");
  spec.agents.vocab.validate();
  auto sender = std::make_shared<MlpSenderCore>(spec.item_dim, spec.hidden,
                                                sender_core_output(spec.agents, spec.hidden), rng);
  auto receiver =
      std::make_shared<DiscriminationReceiverCore>(spec.hidden, spec.item_dim, spec.hidden, rng);
  return wrap(sender, receiver, spec.agents,
              [](const GameBatch& b, const Message&, const Tensor& out) {
                return classification_loss(out, b.labels);
              },
              rng);
}

FileTask parse_file_task(const std::string& name) {
  if (name == "classification") return FileTask::classification;
  if (name == "reconstruction") return FileTask::reconstruction;
  throw std::invalid_argument("unknown file task '" + name +
                              "' (expected classification or reconstruction)");
}

const char* to_string(FileTask task) {
  return task == FileTask::classification ? "classification" : "reconstruction";
}

namespace {

struct SplitData {
  std::vector<std::string> features;
  Tensor inputs;
  Tensor targets;
  std::size_t classes = 0;
};

SplitData split_table(const NumericTable& table, const FileGameSpec& spec,
                      const std::string& source) {
  std::optional<std::size_t> label;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (table.header[c] == spec.label_column) label = c;
  }
  if (spec.task == FileTask::classification && !label) {
    table.column_index(spec.label_column);  // throws with the column list
  }
  if (table.rows == 0) throw std::invalid_argument(source + ": table has no data rows");

  SplitData out;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    if (!label || c != *label) {
      cols.push_back(c);
      out.features.push_back(table.header[c]);
    }
  }
  if (cols.empty()) throw std::invalid_argument(source + ": no feature columns");

  std::vector<double> x(table.rows * cols.size());
  for (std::size_t r = 0; r < table.rows; ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) x[r * cols.size() + j] = table.at(r, cols[j]);
  }
  out.inputs = Tensor({table.rows, cols.size()}, x);

  if (spec.task == FileTask::reconstruction) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
        throw std::invalid_argument(source + ": reconstruction targets must lie in [0, 1]; data row " +
                             std::to_string(i / cols.size() + 1) + ", column '" +
                             out.features[i % cols.size()] + "' is " + std::to_string(x[i]));
      }
    }
    out.targets = out.inputs;
    return out;
  }

  std::vector<double> y(table.rows);
  for (std::size_t r = 0; r < table.rows; ++r) {
    const double v = table.at(r, *label);
    if (!(v >= 0.0) || v != std::floor(v)) {
      throw std::invalid_argument(source + ": data row " + std::to_string(r + 1) + ": label " +
                                  std::to_string(v) + " is not a non-negative integer");
    }
    y[r] = v;
    out.classes = std::max(out.classes, static_cast<std::size_t>(v) + 1);
  }
  out.targets = Tensor::vector(std::move(y));
  return out;
}

}  // namespace

FileGameData load_file_game_data(const FileGameSpec& spec) {
  SplitData train = split_table(load_table(spec.train_table), spec, spec.train_table.string());
  FileGameData data;
  data.features = train.features;
  data.classes = train.classes;
  if (spec.task == FileTask::classification && data.classes < 2) {
    throw std::invalid_argument(spec.train_table.string() + ": classification needs at least 2 classes");
  }
  data.train = std::make_shared<TensorDataset>(train.inputs, train.targets);
  if (spec.validation_table) {
    SplitData val =
        split_table(load_table(*spec.validation_table), spec, spec.validation_table->string());
    if (val.features != train.features) {
      throw std::invalid_argument(spec.validation_table->string() +
                                  ": columns differ from the training table");
    }
    if (val.classes > data.classes) {
      throw std::invalid_argument(spec.validation_table->string() + ": label " +
                                  std::to_string(val.classes - 1) + " never occurs in training");
    }
    data.validation = std::make_shared<TensorDataset>(val.inputs, val.targets);
  }
  return data;
}

GameParts build_file_game(const FileGameSpec& spec, const FileGameData& data, Rng& rng) {
  check_positive(spec.hidden, "hidden size");
  spec.agents.vocab.validate();
  const std::size_t d = data.features.size();
  auto sender = std::make_shared<MlpSenderCore>(d, spec.hidden,
                                                sender_core_output(spec.agents, spec.hidden), rng);
  if (spec.task == FileTask::reconstruction) {
    auto receiver =
        std::make_shared<MlpReceiverCore>(spec.hidden, spec.hidden, d, true, std::nullopt, rng);
    return wrap(sender, receiver, spec.agents,
                [](const GameBatch& b, const Message&, const Tensor& out) {
                  return reconstruction_loss(out, b.labels);
                },
                rng);
  }
  auto receiver = std::make_shared<MlpReceiverCore>(spec.hidden, spec.hidden, data.classes, false,
                                                    std::nullopt, rng);
  return wrap(sender, receiver, spec.agents,
              [](const GameBatch& b, const Message&, const Tensor& out) {
                return classification_loss(out, b.labels);
              },
              rng);
}

}  // namespace egg
