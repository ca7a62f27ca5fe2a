#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "egg/rng.hpp"
#include "egg/tensor.hpp"

namespace egg {

// Sender input i_s, optional receiver input i_r and labels l, all sharing
// the leading batch dimension.
struct GameBatch {
  Tensor sender_input;
  std::optional<Tensor> receiver_input;
  Tensor labels;

  std::size_t size() const { return sender_input.rank() ? sender_input.dim(0) : 0; }
  void validate() const;
};

// Source of game batches. `rng` drives any per-instance randomness such as
// distractor draws; datasets without any ignore it.
class GameDataset {
 public:
  virtual ~GameDataset() = default;
  virtual std::size_t size() const = 0;
  virtual GameBatch batch(std::span<const std::size_t> items, Rng& rng) const = 0;
};

}  // namespace egg
