#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace egg {

// Everything one training run needs. Keys of the flat JSON form match the
// field names; see config_keys() for types, defaults and meaning.
struct RunConfig {
  std::string game = "reconstruction";  // reconstruction | discrimination | file
  std::string data = "attributes";      // attributes | idx (reconstruction only)
  std::int64_t n_attributes = 1;
  std::int64_t n_values = 8;
  std::int64_t n_items = 0;  // 0: every attribute tuple
  std::string idx_images;
  std::string idx_labels;
  std::int64_t idx_limit = 0;  // 0: every image
  std::string train_table;
  std::string val_table;
  std::string label_column = "label";
  std::string task = "classification";
  std::int64_t candidates = 5;

  std::string mode = "gs";         // gs | reinforce
  std::string message = "symbol";  // symbol | sequence
  std::int64_t vocab_size = 8;
  std::int64_t max_len = 1;
  std::string cell = "lstm";
  std::int64_t hidden = 32;
  std::int64_t embed = 10;
  double temperature = 1.0;
  bool straight_through = false;
  double sender_entropy_coeff = 0.0;
  double receiver_entropy_coeff = 0.0;

  std::string optimizer = "adam";  // adam | sgd
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  std::int64_t epochs = 100;
  std::int64_t batch_size = 32;
  bool shuffle = true;
  std::int64_t patience = 0;
  std::string early_stop_metric = "loss";
  bool early_stop_maximize = false;
  std::int64_t checkpoint_every = 0;
  bool log_wall_time = false;
  std::uint64_t seed = 0;
  std::string out_dir = "run";
};

enum class KeyType { integer, unsigned_integer, number, boolean, string };

struct ConfigKey {
  std::string name;
  KeyType type;
  std::string help;
};

// Every recognised key, in declaration order.
const std::vector<ConfigKey>& config_keys();
bool is_config_key(const std::string& name);

// Invalid configuration; `key` names the offending entry (may be empty).
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// The closest known key within a small edit distance, or "".
std::string suggest_key(const std::string& unknown);

nlohmann::json to_json(const RunConfig& cfg);
// Applies the keys of a JSON object on top of `cfg`; unknown keys and type
// mismatches throw ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
// Parses `text` according to the key's type (flags arrive as text).
void apply_text(RunConfig& cfg, const std::string& key, const std::string& text);
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json load_json_file(const std::filesystem::path& path);

// Range and consistency checks of every field; throws ConfigError.
void validate(const RunConfig& cfg);

// Canonical text: compact JSON with sorted keys.
std::string canonical_text(const RunConfig& cfg);

// Sweep over RunConfig keys. Runs are the cartesian product of the value
// lists, enumerated with the keys in sorted order and the last key varying
// fastest.
struct GridSpec {
  RunConfig base;
  std::map<std::string, std::vector<nlohmann::json>> sweep;
  std::size_t workers = 1;
  std::string metric = "loss";
  bool maximize = false;

  std::size_t size() const;
  // The i-th child: base plus the i-th combination, seed derived from
  // (base seed, "grid", i), output directory <base out_dir>/run_<i>.
  RunConfig child(std::size_t i) const;
  // The swept values of the i-th child as compact JSON.
  std::string child_label(std::size_t i) const;
};

// {"base": {...}, "sweep": {"key": [values...]}, "workers": N,
//  "metric": "acc", "maximize": true}
GridSpec grid_from_json(const nlohmann::json& j);

}  // namespace egg
