#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "egg/runner.hpp"

namespace egg {

std::vector<GridRow> run_grid(const GridSpec& spec) {
  const std::size_t n = spec.size();
  std::vector<GridRow> rows(n);
  std::atomic<std::size_t> next{0};

  // Children share nothing mutable: each builds its own data, agents, RNG
  // streams and (thread-local) tape, so results do not depend on scheduling.
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      GridRow& row = rows[i];
      row.index = i;
      row.config = spec.child_label(i);
      try {
        row.metrics = run_training(spec.child(i)).final_metrics;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(spec.workers, n));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::filesystem::path out(spec.base.out_dir);
  std::filesystem::create_directories(out);
  std::ofstream table(out / "results.tsv");
  bool any_ok = false;
  for (const auto& r : rows) any_ok = any_ok || r.ok;
  std::vector<GridRow> ranked = rows;
  if (any_ok) {
    try {
      ranked = grid_report(rows, spec.metric, spec.maximize);
    } catch (const std::invalid_argument&) {
      // Unrankable (e.g. the metric is missing): keep index order.
    }
  }
  write_grid_table(table, ranked);
  return rows;
}

}  // namespace egg
