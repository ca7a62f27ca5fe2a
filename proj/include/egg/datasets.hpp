#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include "egg/batch.hpp"
#include "egg/rng.hpp"

namespace egg {

// Tuples of n_attributes values in [0, n_values), each encoded as the
// concatenation of one one-hot block per attribute.
struct AttributeValueDataset {
  std::size_t n_attributes = 0;
  std::size_t n_values = 0;
  std::vector<std::vector<std::size_t>> items;

  std::size_t dim() const { return n_attributes * n_values; }
  std::size_t size() const { return items.size(); }
  std::vector<double> encode(const std::vector<std::size_t>& tuple) const;
  std::vector<std::size_t> decode(std::span<const double> encoded) const;
  // [size x dim] encoding of every item.
  Tensor features() const;
};

// All n_values^n_attributes tuples in lexicographic order, or a uniform
// subset of `subset_size` of them (without replacement, kept in that order).
AttributeValueDataset gen_attribute_dataset(std::size_t n_attributes, std::size_t n_values,
                                            Rng& rng,
                                            std::optional<std::size_t> subset_size = std::nullopt);

// Images in IDX format: pixels stored as the raw bytes, labels as read.
struct IdxDataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count x rows x cols
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return rows * cols; }
  // [count x rows*cols], each pixel / 255.
  Tensor images() const;
};

class IdxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Images file: big-endian u32 magic 2051, count, rows, cols, then u8 pixels.
// Labels file: big-endian u32 magic 2049, count, then u8 labels.
IdxDataset parse_idx(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_idx(const IdxDataset& data, const std::filesystem::path& images,
               const std::filesystem::path& labels);

// Splits [0, size) into batches. With shuffling, the order of epoch e is a
// function of (seed, e) only. The last batch may be short.
class BatchLoader {
 public:
  BatchLoader(const GameDataset& data, std::size_t batch_size, bool shuffle, std::uint64_t seed);

  std::size_t num_batches() const;
  std::vector<std::vector<std::size_t>> index_batches(std::uint64_t epoch) const;
  // Materialized batches; per-instance randomness comes from the
  // (seed, "instances", epoch) stream.
  std::vector<GameBatch> batches(std::uint64_t epoch) const;

 private:
  const GameDataset& data_;
  std::size_t batch_size_;
  bool shuffle_;
  std::uint64_t seed_;
};

}  // namespace egg
