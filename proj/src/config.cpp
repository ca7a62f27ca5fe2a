#include "egg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

#include "egg/rng.hpp"

namespace egg {

namespace {

using nlohmann::json;

struct Field {
  ConfigKey key;
  std::function<json(const RunConfig&)> get;
  std::function<void(RunConfig&, const json&)> set;
};

const char* type_name(KeyType t) {
  switch (t) {
    case KeyType::integer:
      return "an integer";
    case KeyType::unsigned_integer:
      return "a non-negative integer";
    case KeyType::number:
      return "a number";
    case KeyType::boolean:
      return "a boolean";
    case KeyType::string:
      return "a string";
  }
  return "?";
}

[[noreturn]] void type_error(const std::string& name, KeyType t, const json& v) {
  throw ConfigError(name, "config key '" + name + "' must be " + type_name(t) + ", got " + v.dump());
}

template <class T>
Field field(std::string name, T RunConfig::*member, std::string help) {
  KeyType type;
  if constexpr (std::is_same_v<T, bool>) {
    type = KeyType::boolean;
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    type = KeyType::unsigned_integer;
  } else if constexpr (std::is_integral_v<T>) {
    type = KeyType::integer;
  } else if constexpr (std::is_floating_point_v<T>) {
    type = KeyType::number;
  } else {
    type = KeyType::string;
  }
  Field f{{name, type, std::move(help)}, nullptr, nullptr};
  f.get = [member](const RunConfig& c) { return json(c.*member); };
  f.set = [member, name, type](RunConfig& c, const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) type_error(name, type, v);
      c.*member = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      // values built in code arrive signed; files parse as unsigned
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        type_error(name, type, v);
      }
      c.*member = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) type_error(name, type, v);
      c.*member = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) type_error(name, type, v);
      c.*member = v.get<double>();
    } else {
      if (!v.is_string()) type_error(name, type, v);
      c.*member = v.get<std::string>();
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("game", &RunConfig::game, "reconstruction, discrimination or file"),
      field("data", &RunConfig::data, "reconstruction inputs: attributes or idx"),
      field("n_attributes", &RunConfig::n_attributes, "attributes per synthetic item"),
      field("n_values", &RunConfig::n_values, "values per attribute"),
      field("n_items", &RunConfig::n_items, "random subset of attribute tuples, 0 for all"),
      field("idx_images", &RunConfig::idx_images, "IDX image file (data = idx)"),
      field("idx_labels", &RunConfig::idx_labels, "IDX label file (data = idx)"),
      field("idx_limit", &RunConfig::idx_limit, "use the first N images, 0 for all"),
      field("train_table", &RunConfig::train_table, "file game: training table"),
      field("val_table", &RunConfig::val_table, "file game: validation table (optional)"),
      field("label_column", &RunConfig::label_column, "file game: label column name"),
      field("task", &RunConfig::task, "file game: classification or reconstruction"),
      field("candidates", &RunConfig::candidates, "discrimination: target + distractors"),
      field("mode", &RunConfig::mode, "channel training: gs or reinforce"),
      field("message", &RunConfig::message, "symbol or sequence"),
      field("vocab_size", &RunConfig::vocab_size, "symbols including eos (id 0)"),
      field("max_len", &RunConfig::max_len, "maximum message length, eos included"),
      field("cell", &RunConfig::cell, "sequence agents: elman, gru or lstm"),
      field("hidden", &RunConfig::hidden, "agent hidden size"),
      field("embed", &RunConfig::embed, "symbol embedding size of sequence agents"),
      field("temperature", &RunConfig::temperature, "Gumbel-Softmax temperature"),
      field("straight_through", &RunConfig::straight_through, "hard one-hot GS forward pass"),
      field("sender_entropy_coeff", &RunConfig::sender_entropy_coeff,
            "REINFORCE: weight of the sender entropy bonus"),
      field("receiver_entropy_coeff", &RunConfig::receiver_entropy_coeff,
            "REINFORCE: weight of a stochastic receiver's entropy bonus"),
      field("optimizer", &RunConfig::optimizer, "adam or sgd"),
      field("lr", &RunConfig::lr, "learning rate"),
      field("beta1", &RunConfig::beta1, "Adam first-moment decay"),
      field("beta2", &RunConfig::beta2, "Adam second-moment decay"),
      field("adam_eps", &RunConfig::adam_eps, "Adam denominator offset"),
      field("epochs", &RunConfig::epochs, "training epochs"),
      field("batch_size", &RunConfig::batch_size, "instances per batch"),
      field("shuffle", &RunConfig::shuffle, "reshuffle the training data every epoch"),
      field("patience", &RunConfig::patience, "early stopping patience in epochs, 0 disables"),
      field("early_stop_metric", &RunConfig::early_stop_metric, "validation metric to monitor"),
      field("early_stop_maximize", &RunConfig::early_stop_maximize,
            "the monitored metric improves upwards"),
      field("checkpoint_every", &RunConfig::checkpoint_every, "checkpoint cadence, 0 disables"),
      field("log_wall_time", &RunConfig::log_wall_time, "add wall-clock times to the metrics log"),
      field("seed", &RunConfig::seed, "master random seed"),
      field("out_dir", &RunConfig::out_dir, "directory receiving every artifact of the run"),
  };
  return table;
}

const Field* find_field(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.key.name == name) return &f;
  }
  return nullptr;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

[[noreturn]] void unknown_key(const std::string& name) {
  std::string msg = "unknown config key '" + name + "'";
  if (auto s = suggest_key(name); !s.empty()) msg += " (did you mean '" + s + "'?)";
  throw ConfigError(name, msg);
}

void require_one_of(const std::string& key, const std::string& value,
                    std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (value == a) return;
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  throw ConfigError(key, "config key '" + key + "' is '" + value + "', expected one of " + list);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, "config key '" + key + "' " + what);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

bool is_config_key(const std::string& name) { return find_field(name) != nullptr; }

std::string suggest_key(const std::string& unknown) {
  std::string best;
  std::size_t best_d = 3;  // suggest only within distance 2
  for (const auto& f : fields()) {
    const std::size_t d = edit_distance(unknown, f.key.name);
    if (d < best_d) {
      best_d = d;
      best = f.key.name;
    }
  }
  return best;
}

json to_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& f : fields()) j[f.key.name] = f.get(cfg);
  return j;
}

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  for (const auto& [name, value] : j.items()) {
    const Field* f = find_field(name);
    if (!f) unknown_key(name);
    f->set(cfg, value);
  }
}

void apply_text(RunConfig& cfg, const std::string& key, const std::string& text) {
  const Field* f = find_field(key);
  if (!f) unknown_key(key);
  json v;
  if (f->key.type == KeyType::string) {
    v = text;
  } else {
    v = json::parse(text, nullptr, false);
    if (v.is_discarded()) type_error(key, f->key.type, json(text));
  }
  f->set(cfg, v);
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("", path.string() + " is not valid JSON");
  return j;
}

void validate(const RunConfig& c) {
  require_one_of("game", c.game, {"reconstruction", "discrimination", "file"});
  require_one_of("mode", c.mode, {"gs", "reinforce"});
  require_one_of("message", c.message, {"symbol", "sequence"});
  require_one_of("cell", c.cell, {"elman", "rnn", "gru", "lstm"});
  require_one_of("optimizer", c.optimizer, {"adam", "sgd"});

  if (c.game == "reconstruction") require_one_of("data", c.data, {"attributes", "idx"});
  const bool attributes = c.game == "discrimination" || (c.game == "reconstruction" && c.data == "attributes");
  if (attributes) {
    require(c.n_attributes >= 1, "n_attributes", "must be at least 1");
    require(c.n_values >= 2, "n_values", "must be at least 2");
    require(c.n_items >= 0, "n_items", "must not be negative");
  }
  if (c.game == "reconstruction" && c.data == "idx") {
    require(!c.idx_images.empty(), "idx_images", "is required when data is idx");
    require(!c.idx_labels.empty(), "idx_labels", "is required when data is idx");
    require(c.idx_limit >= 0, "idx_limit", "must not be negative");
  }
  if (c.game == "discrimination") require(c.candidates >= 2, "candidates", "must be at least 2");
  if (c.game == "file") {
    require(!c.train_table.empty(), "train_table", "is required for the file game");
    require_one_of("task", c.task, {"classification", "reconstruction"});
    require(!c.label_column.empty(), "label_column", "must not be empty");
  }

  require(c.vocab_size >= 2, "vocab_size", "must be at least 2 (eos plus one symbol)");
  require(c.max_len >= 1, "max_len", "must be at least 1");
  if (c.message == "symbol") require(c.max_len == 1, "max_len", "must be 1 for symbol messages");
  require(c.hidden >= 1, "hidden", "must be at least 1");
  require(c.embed >= 1, "embed", "must be at least 1");
  require(c.temperature > 0.0 && std::isfinite(c.temperature), "temperature", "must be positive");
  require(std::isfinite(c.sender_entropy_coeff), "sender_entropy_coeff", "must be finite");
  require(std::isfinite(c.receiver_entropy_coeff), "receiver_entropy_coeff", "must be finite");
  require(c.lr > 0.0 && std::isfinite(c.lr), "lr", "must be positive");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0, "beta1", "must lie in [0, 1)");
  require(c.beta2 >= 0.0 && c.beta2 < 1.0, "beta2", "must lie in [0, 1)");
  require(c.adam_eps > 0.0, "adam_eps", "must be positive");
  require(c.epochs >= 1, "epochs", "must be at least 1");
  require(c.batch_size >= 1, "batch_size", "must be at least 1");
  require(c.patience >= 0, "patience", "must not be negative");
  require(!c.early_stop_metric.empty(), "early_stop_metric", "must not be empty");
  require(c.checkpoint_every >= 0, "checkpoint_every", "must not be negative");
  require(!c.out_dir.empty(), "out_dir", "must not be empty");
}

std::string canonical_text(const RunConfig& cfg) { return to_json(cfg).dump(); }

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& [k, values] : sweep) n *= values.size();
  return n;
}

namespace {

std::vector<std::pair<std::string, const json*>> combination(const GridSpec& g, std::size_t i) {
  std::vector<std::pair<std::string, const json*>> out(g.sweep.size());
  std::size_t rest = i, slot = g.sweep.size();
  for (auto it = g.sweep.rbegin(); it != g.sweep.rend(); ++it) {
    const auto& values = it->second;
    out[--slot] = {it->first, &values[rest % values.size()]};
    rest /= values.size();
  }
  return out;
}

}  // namespace

RunConfig GridSpec::child(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("grid child " + std::to_string(i));
  RunConfig c = base;
  for (const auto& [key, value] : combination(*this, i)) find_field(key)->set(c, *value);
  c.seed = derive_seed(base.seed, "grid", i);
  c.out_dir = (std::filesystem::path(base.out_dir) / ("run_" + std::to_string(i))).string();
  return c;
}

std::string GridSpec::child_label(std::size_t i) const {
  json j = json::object();
  for (const auto& [key, value] : combination(*this, i)) j[key] = *value;
  return j.dump();
}

GridSpec grid_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "grid specification must be a JSON object");
  GridSpec g;
  for (const auto& [name, value] : j.items()) {
    if (name == "base") {
      apply_json(g.base, value);
    } else if (name == "sweep") {
      if (!value.is_object()) throw ConfigError("sweep", "'sweep' must map keys to value lists");
      for (const auto& [key, values] : value.items()) {
        const Field* f = find_field(key);
        if (!f) unknown_key(key);
        if (key == "seed" || key == "out_dir") {
          throw ConfigError(key, "'" + key + "' is derived per grid run and cannot be swept");
        }
        if (!values.is_array() || values.empty()) {
          throw ConfigError(key, "sweep of '" + key + "' must be a non-empty list");
        }
        RunConfig probe;
        for (const auto& v : values) f->set(probe, v);  // type-checks every value
        g.sweep[key] = std::vector<json>(values.begin(), values.end());
      }
    } else if (name == "workers") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 1) {
        throw ConfigError("workers", "'workers' must be a positive integer");
      }
      g.workers = value.get<std::size_t>();
    } else if (name == "metric") {
      if (!value.is_string()) throw ConfigError("metric", "'metric' must be a string");
      g.metric = value.get<std::string>();
    } else if (name == "maximize") {
      if (!value.is_boolean()) throw ConfigError("maximize", "'maximize' must be a boolean");
      g.maximize = value.get<bool>();
    } else {
      throw ConfigError(name, "unknown grid key '" + name +
                                  "' (expected base, sweep, workers, metric, maximize)");
    }
  }
  validate(g.base);
  for (std::size_t i = 0; i < g.size(); ++i) validate(g.child(i));
  return g;
}

}  // namespace egg
