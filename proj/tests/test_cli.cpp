#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path root = fs::temp_directory_path() / "egg_test_cli";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome egg_cli(const std::string& args) {
  fs::create_directories(root);
  const std::string cmd = std::string(EGG_CLI_PATH) + " " + args + " > " +
                          (root / "stdout").string() + " 2> " + (root / "stderr").string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(root / "stdout"),
          slurp(root / "stderr")};
}

std::string dir(const std::string& name) {
  const fs::path p = root / name;
  fs::remove_all(p);
  return p.string();
}

const std::string tiny = "--n_values 4 --vocab_size 6 --hidden 8 --batch_size 2";

}  // namespace

TEST_CASE("cli: keys, usage errors") {
  const auto k = egg_cli("keys");
  CHECK(k.code == 0);
  CHECK(k.out.find("batch_size\t32") != std::string::npos);
  CHECK(egg_cli("").code == 1);
  CHECK(egg_cli("train --no_such_flag 1").code == 1);
  CHECK(egg_cli("eval").code == 1);  // --checkpoint required
}

TEST_CASE("cli: invalid configuration exits 1 naming the key") {
  fs::create_directories(root);
  std::ofstream(root / "bad.json") << R"({"batchsize": 4})";
  const auto r = egg_cli("train --config " + (root / "bad.json").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("batchsize") != std::string::npos);
  CHECK(r.err.find("batch_size") != std::string::npos);

  const auto range = egg_cli("train --vocab_size 1 --out_dir " + dir("never"));
  CHECK(range.code == 1);
  CHECK(range.err.find("vocab_size") != std::string::npos);
  CHECK_FALSE(fs::exists(root / "never"));

  std::ofstream(root / "t.csv") << "a,label\n1,0\n2,x\n";
  const auto table = egg_cli("train --game file --train_table " + (root / "t.csv").string() +
                             " --out_dir " + dir("table"));
  CHECK(table.code == 1);
  CHECK(table.err.find("t.csv:3") != std::string::npos);
}

TEST_CASE("cli: flags override the file, the file overrides defaults") {
  fs::create_directories(root);
  std::ofstream(root / "p.json") << R"({"epochs": 2, "lr": 0.5, "n_values": 4, "vocab_size": 6})";
  const std::string out = dir("precedence");
  const auto r = egg_cli("train --config " + (root / "p.json").string() + " --lr 0.02 --out_dir " + out);
  REQUIRE(r.code == 0);
  const auto cfg = nlohmann::json::parse(slurp(fs::path(out) / "config.json"));
  CHECK(cfg.at("lr") == 0.02);
  CHECK(cfg.at("epochs") == 2);
  CHECK(cfg.at("batch_size") == 32);
}

TEST_CASE("cli: same config and seed give identical logs and artifacts") {
  const std::string a = dir("det_a"), b = dir("det_b");
  const std::string common =
      tiny + " --epochs 3 --mode reinforce --message sequence --max_len 3 --seed 5";
  REQUIRE(egg_cli("train " + common + " --out_dir " + a).code == 0);
  const std::string first_ckpt = slurp(fs::path(a) / "final.ckpt");
  REQUIRE(egg_cli("train " + common + " --out_dir " + b).code == 0);
  const std::string log = slurp(fs::path(a) / "metrics.jsonl");
  CHECK(!log.empty());
  CHECK(log == slurp(fs::path(b) / "metrics.jsonl"));
  CHECK(slurp(fs::path(a) / "summary.json") == slurp(fs::path(b) / "summary.json"));
  // checkpoints embed the config, out_dir included: rerun in place to compare
  REQUIRE(egg_cli("train " + common + " --out_dir " + a).code == 0);
  CHECK(first_ckpt == slurp(fs::path(a) / "final.ckpt"));
  const auto summary = nlohmann::json::parse(slurp(fs::path(a) / "summary.json"));
  CHECK(summary.at("status") == "ok");
  CHECK(summary.at("epochs") == 3);
}

TEST_CASE("cli: the paper's configuration runs end to end; eval and dump") {
  // sequence REINFORCE, LSTM hidden 20, V=10, max_len=2, 15 epochs, batch 32,
  // on 2x5 attribute images instead of digits
  const std::string out = dir("paper");
  const auto r = egg_cli(
      "train --mode reinforce --message sequence --cell lstm --hidden 20 --vocab_size 10 "
      "--max_len 2 --epochs 15 --batch_size 32 --n_attributes 2 --n_values 5 --seed 1 "
      "--out_dir " + out);
  REQUIRE(r.code == 0);
  const auto final_metrics = nlohmann::json::parse(r.out);
  CHECK(final_metrics.contains("acc"));

  const std::string ckpt = (fs::path(out) / "final.ckpt").string();
  const auto e = egg_cli("eval --checkpoint " + ckpt);
  REQUIRE(e.code == 0);
  const auto eval_metrics = nlohmann::json::parse(e.out);
  CHECK(eval_metrics.at("acc") == final_metrics.at("acc"));
  CHECK(eval_metrics.at("loss") == final_metrics.at("loss"));

  const std::string images = dir("paper_dump");
  const auto d = egg_cli("dump --checkpoint " + ckpt + " --out " + images);
  REQUIRE(d.code == 0);
  std::size_t msgs = 0, grids = 0;
  for (const auto& f : fs::directory_iterator(images)) {
    const auto name = f.path().filename().string();
    msgs += name.rfind("msg_", 0) == 0;
    grids += name == "codebook.pgm";
  }
  CHECK(msgs == 100);
  CHECK(grids == 1);

  const auto mismatch = egg_cli("eval --checkpoint " + ckpt + " --hidden 24");
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("vs model") != std::string::npos);
}

TEST_CASE("cli: resume continues the metrics log") {
  const std::string out = dir("resume");
  REQUIRE(egg_cli("train " + tiny + " --epochs 3 --checkpoint_every 1 --out_dir " + out).code == 0);
  const std::string ckpt = (fs::path(out) / "checkpoints" / "epoch_2.ckpt").string();
  REQUIRE(fs::exists(ckpt));
  REQUIRE(egg_cli("train " + tiny + " --epochs 5 --out_dir " + out + " --resume " + ckpt).code == 0);
  std::istringstream lines(slurp(fs::path(out) / "metrics.jsonl"));
  std::size_t n = 0;
  for (std::string l; std::getline(lines, l);) ++n;
  CHECK(n == 6 + 6);  // 3 epochs, then epochs 3..5 again from the epoch-2 checkpoint
}

TEST_CASE("cli: grid writes a ranked table; a failing child gives exit 2") {
  fs::create_directories(root);
  const std::string out = dir("grid");
  std::ofstream(root / "grid.json") << nlohmann::json{
      {"base", {{"n_values", 4}, {"vocab_size", 6}, {"hidden", 8}, {"epochs", 2}, {"out_dir", out}}},
      {"sweep", {{"lr", {0.01, 0.02}}, {"temperature", {1.0}}}},
      {"metric", "acc"},
      {"maximize", true}}.dump();
  const auto r = egg_cli("grid --spec " + (root / "grid.json").string() + " --workers 2");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(fs::path(out) / "run_0" / "metrics.jsonl"));
  CHECK(fs::exists(fs::path(out) / "run_1" / "metrics.jsonl"));
  const std::string tsv = slurp(fs::path(out) / "results.tsv");
  std::istringstream table(tsv);
  std::size_t n = 0;
  for (std::string l; std::getline(table, l);) ++n;
  CHECK(n == 3);
  CHECK(r.out == tsv);  // the printed table is the ranked one

  // lr = 1e300 overflows Adam-free SGD into a non-finite loss
  const std::string bad = dir("grid_bad");
  std::ofstream(root / "grid_bad.json") << nlohmann::json{
      {"base", {{"n_values", 4}, {"vocab_size", 6}, {"hidden", 8}, {"epochs", 3},
                {"optimizer", "sgd"}, {"out_dir", bad}}},
      {"sweep", {{"lr", {0.01, 1e300}}}}}.dump();
  const auto f = egg_cli("grid --spec " + (root / "grid_bad.json").string());
  CHECK(f.code == 2);
  const std::string results = slurp(fs::path(bad) / "results.tsv");
  CHECK(results.find("failed") != std::string::npos);
  CHECK(results.find("ok") != std::string::npos);
}
