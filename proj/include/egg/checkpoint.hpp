#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "egg/nn.hpp"

namespace egg {

// Binary layout, all integers little-endian:
//
//   magic    8 bytes  "EGGCKPT\0"
//   version  u32
//   count    u32      number of entries
//   entry:   kind u8 (1 = tensor, 2 = blob), name_len u32, name bytes, then
//            tensor: rank u32, rank x u64 extents, numel x f64 values
//            blob:   size u64, bytes
//
// Entries are written in name order.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t version = kFormatVersion;
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> blobs;

  const Tensor& tensor(const std::string& name) const;
  const std::string& blob(const std::string& name) const;
  double scalar(const std::string& name) const { return tensor(name).item(); }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint checkpoint_load(const std::filesystem::path& path);

// Stores each parameter under `prefix + name`.
void store_params(Checkpoint& ckpt, const ParamList& params, const std::string& prefix = "param.");

// Copies stored values into `params`. Every missing, extra or differently
// shaped tensor is collected into one error message.
void restore_params(const Checkpoint& ckpt, const ParamList& params,
                    const std::string& prefix = "param.");

}  // namespace egg
