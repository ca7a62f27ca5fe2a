// egg: train, evaluate, dump and grid-search communication games.
//
//   egg train [--config run.json] [--<key> <value>]... [--resume ckpt]
//   egg eval  --checkpoint ckpt [--config run.json] [--<key> <value>]...
//   egg dump  --checkpoint ckpt --out dir
//   egg grid  --spec grid.json [--workers N]
//   egg keys
//
// Exit status: 0 success, 1 invalid configuration or input, 2 runtime failure.

#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "egg/datasets.hpp"
#include "egg/runner.hpp"
#include "egg/table.hpp"

namespace {

using egg::RunConfig;

struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd, bool with_keys) {
    cmd->add_option("--config", file, "JSON run configuration");
    if (!with_keys) return;
    for (const auto& key : egg::config_keys()) {
      cmd->add_option("--" + key.name, values[key.name], key.help)->group("Run configuration");
    }
  }

  // file values over `base`, then flags over both
  RunConfig apply(RunConfig base, CLI::App* cmd) const {
    if (!file.empty()) egg::apply_json(base, egg::load_json_file(file));
    for (const auto& key : egg::config_keys()) {
      if (cmd->count("--" + key.name) > 0) egg::apply_text(base, key.name, values.at(key.name));
    }
    egg::validate(base);
    return base;
  }
};

void print_metrics(const egg::MetricMap& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[k] = v;
  std::cout << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emergent communication games: train, evaluate, dump codebooks, grid search"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train one configured game");
  ConfigFlags train_flags;
  train_flags.attach(train, true);
  std::string resume;
  train->add_option("--resume", resume, "continue from this checkpoint");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on its validation data");
  ConfigFlags eval_flags;
  eval_flags.attach(eval, true);
  std::string eval_ckpt;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();

  auto* dump = app.add_subcommand("dump", "write the receiver's codebook images");
  std::string dump_ckpt, dump_out;
  dump->add_option("--checkpoint", dump_ckpt, "checkpoint file")->required();
  dump->add_option("--out", dump_out, "output directory")->required();

  auto* grid = app.add_subcommand("grid", "run a hyperparameter grid");
  std::string grid_spec;
  std::size_t workers = 0;
  grid->add_option("--spec", grid_spec, "JSON grid specification")->required();
  grid->add_option("--workers", workers, "concurrent runs (overrides the spec)");

  auto* keys = app.add_subcommand("keys", "list configuration keys and defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      const RunConfig cfg = train_flags.apply(RunConfig{}, train);
      std::optional<std::filesystem::path> from;
      if (!resume.empty()) from = resume;
      const auto result = egg::run_training(cfg, from);
      print_metrics(result.final_metrics);
    } else if (*eval) {
      const auto base = egg::checkpoint_config(egg::checkpoint_load(eval_ckpt));
      auto ex = egg::load_experiment(eval_ckpt, eval_flags.apply(base, eval));
      print_metrics(egg::evaluate_experiment(*ex));
    } else if (*dump) {
      auto ex = egg::load_experiment(dump_ckpt);
      const auto book = egg::dump_codebook(ex->game->receiver(), ex->game->receiver().vocab(),
                                           dump_out);
      std::cout << book.size() << " messages written to " << dump_out << '\n';
    } else if (*grid) {
      egg::GridSpec spec = egg::grid_from_json(egg::load_json_file(grid_spec));
      if (workers > 0) spec.workers = workers;
      const auto rows = egg::run_grid(spec);
      std::cout << std::ifstream(std::filesystem::path(spec.base.out_dir) / "results.tsv").rdbuf();
      for (const auto& r : rows) {
        if (!r.ok) return 2;
      }
    } else if (*keys) {
      const auto defaults = egg::to_json(RunConfig{});
      for (const auto& k : egg::config_keys()) {
        std::cout << k.name << '\t' << defaults[k.name].dump() << '\t' << k.help << '\n';
      }
    }
  } catch (const egg::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const egg::TableError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const egg::IdxError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
