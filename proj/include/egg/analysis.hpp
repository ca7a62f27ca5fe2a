#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "egg/agents.hpp"
#include "egg/game.hpp"

namespace egg {

// Receiver output for every one of the V^L symbol strings, in lexicographic
// order with the first symbol most significant. Strings are fed as they are;
// the receiver itself must ignore what follows an eos.
struct Codebook {
  VocabSpec vocab;
  std::size_t rows = 0, cols = 0;             // image shape of each output
  std::vector<std::vector<std::size_t>> messages;
  std::vector<std::vector<double>> outputs;

  std::size_t size() const { return messages.size(); }
};

// Enumerates the codebook. With a non-empty `out_dir`, also writes one 8-bit
// binary PGM per message (msg_<s1>_<s2>...pgm) and codebook.pgm, a grid with
// one row per combination of the leading L-1 symbols (row-major) and one
// column per last symbol, tiles separated by 1-pixel white lines. Pixel
// values are round(output * 255) after clamping to [0, 1].
Codebook dump_codebook(const Receiver& receiver, const VocabSpec& vocab,
                       const std::filesystem::path& out_dir = {});

void write_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
               std::span<const double> values);

struct MessageStats {
  std::size_t count = 0;
  std::size_t unique = 0;
  double entropy_bits = 0.0;
  std::vector<double> position_entropy_bits;  // over samples still emitting there
  double mean_length = 0.0;
};

// Messages are compared up to and including their eos.
MessageStats message_stats(std::span<const Interaction> interactions);

// Entropy in bits of an empirical distribution given by counts.
double entropy_bits(const std::vector<std::size_t>& counts);

struct GridRow {
  std::size_t index = 0;
  std::string config;  // canonical text of the swept values
  bool ok = true;
  std::string error;
  std::map<std::string, double> metrics;
};

// Successful rows sorted by `metric` (descending when `maximize`), ties by
// config text, followed by failed rows in index order. Successful rows must
// all report the same metric names, `metric` among them.
std::vector<GridRow> grid_report(std::vector<GridRow> rows, const std::string& metric,
                                 bool maximize);

// Tab-separated: rank, index, status, config, one column per metric, error.
void write_grid_table(std::ostream& out, std::span<const GridRow> rows);

}  // namespace egg
