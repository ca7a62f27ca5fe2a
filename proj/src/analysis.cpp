#include "egg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <stdexcept>

namespace egg {

void write_pgm(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
               std::span<const double> values) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("write_pgm: " + std::to_string(values.size()) +
                                " values for a " + std::to_string(rows) + "x" +
                                std::to_string(cols) + " image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Codebook dump_codebook(const Receiver& receiver, const VocabSpec& vocab,
                       const std::filesystem::path& out_dir) {
  vocab.validate();
  const auto image = receiver.output_image();
  if (!image) throw std::invalid_argument("dump_codebook: receiver output is not image-shaped");
  const auto [rows, cols] = *image;
  const std::size_t V = vocab.size, L = vocab.max_len;

  std::size_t n = 1;
  for (std::size_t t = 0; t < L; ++t) {
    if (n > 1'000'000 / V) throw std::invalid_argument("dump_codebook: V^L is too large");
    n *= V;
  }

  DiscreteMessage msg;
  msg.batch = n;
  msg.max_len = L;
  msg.symbols.resize(n * L);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (std::size_t t = L; t-- > 0;) {
      msg.symbols[i * L + t] = rest % V;
      rest /= V;
    }
  }
  msg.lengths = message_lengths(msg.symbols, n, L);
  msg.log_prob = Tensor({n});
  msg.entropy = Tensor({n});

  Tensor output;
  {
    NoGradGuard no_grad;
    Rng unused(0);
    output = receiver.receive(Message(msg), std::nullopt, unused, false).output;
  }
  if (output.rank() != 2 || output.dim(0) != n || output.dim(1) != rows * cols) {
    throw ShapeError("dump_codebook: receiver output " + shape_str(output.shape()) +
                     " does not hold " + std::to_string(rows) + "x" + std::to_string(cols) +
                     " images");
  }

  Codebook book;
  book.vocab = vocab;
  book.rows = rows;
  book.cols = cols;
  const std::size_t px = rows * cols;
  const auto values = output.values();
  for (std::size_t i = 0; i < n; ++i) {
    book.messages.emplace_back(msg.symbols.begin() + i * L, msg.symbols.begin() + (i + 1) * L);
    book.outputs.emplace_back(values.begin() + i * px, values.begin() + (i + 1) * px);
  }

  if (out_dir.empty()) return book;
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = "msg";
    for (std::size_t s : book.messages[i]) name += "_" + std::to_string(s);
    write_pgm(out_dir / (name + ".pgm"), rows, cols, book.outputs[i]);
  }
  const std::size_t grid_rows = n / V, grid_cols = V;
  const std::size_t H = grid_rows * (rows + 1) - 1, W = grid_cols * (cols + 1) - 1;
  std::vector<double> grid(H * W, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gr = i / V, gc = i % V;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        grid[(gr * (rows + 1) + r) * W + gc * (cols + 1) + c] = book.outputs[i][r * cols + c];
      }
    }
  }
  write_pgm(out_dir / "codebook.pgm", H, W, grid);
  return book;
}

double entropy_bits(const std::vector<std::size_t>& counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

MessageStats message_stats(std::span<const Interaction> interactions) {
  MessageStats stats;
  std::map<std::vector<std::size_t>, std::size_t> messages;
  std::vector<std::map<std::size_t, std::size_t>> positions;
  double length_total = 0.0;
  for (const auto& it : interactions) {
    const std::size_t L = it.max_len;
    if (positions.size() < L) positions.resize(L);
    for (std::size_t b = 0; b < it.size(); ++b) {
      const std::size_t len = it.lengths[b];
      std::vector<std::size_t> m(it.symbols.begin() + b * L, it.symbols.begin() + b * L + len);
      for (std::size_t t = 0; t < len; ++t) ++positions[t][m[t]];
      ++messages[std::move(m)];
      length_total += static_cast<double>(len);
      ++stats.count;
    }
  }
  if (stats.count == 0) throw std::invalid_argument("message_stats: no messages");

  std::vector<std::size_t> counts;
  for (const auto& [m, c] : messages) counts.push_back(c);
  stats.unique = messages.size();
  stats.entropy_bits = entropy_bits(counts);
  for (const auto& pos : positions) {
    std::vector<std::size_t> pc;
    for (const auto& [s, c] : pos) pc.push_back(c);
    stats.position_entropy_bits.push_back(entropy_bits(pc));
  }
  stats.mean_length = length_total / static_cast<double>(stats.count);
  return stats;
}

std::vector<GridRow> grid_report(std::vector<GridRow> rows, const std::string& metric,
                                 bool maximize) {
  if (rows.empty()) throw std::invalid_argument("grid_report: no rows");
  std::vector<GridRow> ok, failed;
  for (auto& r : rows) (r.ok ? ok : failed).push_back(std::move(r));

  if (!ok.empty()) {
    std::set<std::string> keys;
    for (const auto& [k, v] : ok.front().metrics) keys.insert(k);
    for (const auto& r : ok) {
      std::set<std::string> mine;
      for (const auto& [k, v] : r.metrics) mine.insert(k);
      if (mine != keys) {
        throw std::invalid_argument("grid_report: run " + std::to_string(r.index) +
                                    " reports different metrics than run " +
                                    std::to_string(ok.front().index));
      }
    }
    if (!keys.count(metric)) {
      throw std::invalid_argument("grid_report: no metric '" + metric + "' in the results");
    }
  }

  std::stable_sort(ok.begin(), ok.end(), [&](const GridRow& a, const GridRow& b) {
    const double x = a.metrics.at(metric), y = b.metrics.at(metric);
    if (x != y) return maximize ? x > y : x < y;
    return a.config < b.config;
  });
  std::sort(failed.begin(), failed.end(),
            [](const GridRow& a, const GridRow& b) { return a.index < b.index; });
  for (auto& r : failed) ok.push_back(std::move(r));
  return ok;
}

void write_grid_table(std::ostream& out, std::span<const GridRow> rows) {
  std::set<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.metrics) names.insert(k);
  }
  out << "rank\tindex\tstatus\tconfig";
  for (const auto& n : names) out << '\t' << n;
  out << "\terror\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  std::size_t rank = 0;
  for (const auto& r : rows) {
    out << ++rank << '\t' << r.index << '\t' << (r.ok ? "ok" : "failed") << '\t' << r.config;
    for (const auto& n : names) {
      out << '\t';
      if (auto it = r.metrics.find(n); it != r.metrics.end()) out << it->second;
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '\t', ' ');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << '\t' << err << '\n';
  }
  out.precision(old_precision);
}

}  // namespace egg
