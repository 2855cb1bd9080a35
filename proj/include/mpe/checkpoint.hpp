#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mpe/tensor.hpp"

namespace mpe::ad {

// Binary layout, all integers little-endian:
//   "MPECKPT\0"             8 bytes
//   u32 version             currently 1
//   u64 n + n bytes         metadata (UTF-8 JSON text)
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               f64 values[product(dims)]
struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& get(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::string& metadata, const ParamList& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);
// Copies stored values into `params`, checking that names and shapes match exactly.
void restore_params(const Checkpoint& ckpt, const ParamList& params);

}  // namespace mpe::ad
