#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace egg {

// Engine-level wrapper around mt19937_64. Distributions are implemented here
// from raw 64-bit draws so that sampled values are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1): never returns 0 or 1.
  double uniform_open();

  // Uniform on [0, 1).
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  // Textual engine state, as produced by the standard stream operators.
  std::string state() const;
  void set_state(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// 64-bit FNV-1a over the bytes of `name`.
std::uint64_t fnv1a(std::string_view name);

// Seed splitting: a named stream of `master` is
//   mix64(mix64(master) ^ fnv1a(name))
// and an indexed substream of that is
//   mix64(stream ^ mix64(index + 0x9e3779b97f4a7c15)).
// Streams with different names are independent so that, for example,
// enabling data shuffling never perturbs parameter initialization.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index);

}  // namespace egg
