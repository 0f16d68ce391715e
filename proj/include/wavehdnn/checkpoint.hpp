#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wavehdnn/types.hpp"

namespace wavehdnn {

/// Binary model snapshot. Layout (all integers little-endian):
///
///   "WHDNN"                      5 bytes magic
///   version                      u32 (currently 1)
///   num_users num_items dim layers   u64 x 4
///   tensors, each:  rank u32, dims u64 x rank, row-major f64 values
///   checksum                     u64, sum of every preceding byte mod 2^64
///
/// Tensor order is fixed per model kind and always ends with the fused
/// inference embeddings (users, then items):
///
///   wavehdnn: user_embed, item_embed,
///             mlp1.{w1,b1,w2,b2}, mlp2.{w1,b1,w2,b2}, mlp_final.{w1,b1,w2,b2},
///             per layer l: wave_filter_user.l, wave_filter_item.l, wave_transform.l,
///             fused_user, fused_item
///   lightgcn: user_embed, item_embed, fused_user, fused_item
///
/// Every tensor is stored as rank 2.
struct Checkpoint {
  std::uint64_t num_users = 0;
  std::uint64_t num_items = 0;
  std::uint64_t dim = 0;
  std::uint64_t layers = 0;
  std::vector<Matrix> tensors;

  /// "wavehdnn" or "lightgcn", inferred from the tensor count.
  std::string model_kind() const;
  const Matrix& fused_users() const { return tensors.at(tensors.size() - 2); }
  const Matrix& fused_items() const { return tensors.at(tensors.size() - 1); }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
/// Throws FormatError on bad magic, version, truncation or checksum mismatch.
Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace wavehdnn
