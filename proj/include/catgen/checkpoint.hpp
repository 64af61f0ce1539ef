#pragma once

// Binary checkpoint container. All integers and IEEE-754 doubles are
// little-endian regardless of host byte order.
//
//   magic      8 bytes  "CATGENCK"
//   version    u32      (currently 1)
//   config     u64 x 9  vocab_size glove_dim input_embed_dim dense1_dim
//                       lstm1_dim lstm2_dim dense2_dim seq_len num_categories
//              f64 x 2  dropout l2
//   flags      u8       bit 0: glove trainable, bit 1: embed trainable
//   vocab      u64 count, then per token: u32 byte length + bytes
//   tensors    u32 count, then per tensor:
//                u32 name length + name, u32 rank, u64 dims[rank], f64 data
//   optimizer  u8 present; if 1: i64 step, u32 count, then count pairs of
//              tensors (first moment, second moment); rank 0 = unallocated
//
// Loading then saving reproduces the original bytes exactly.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "catgen/model.hpp"
#include "catgen/nn.hpp"
#include "catgen/vocabulary.hpp"

namespace catgen::model {

struct Checkpoint {
  ModelConfig config;
  corpus::Vocabulary vocab;
  ModelParams params;
  std::optional<nn::AdamState> optimizer;
};

inline constexpr std::string_view kCheckpointMagic = "CATGENCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws std::runtime_error on a bad magic, unsupported version, truncated
/// data or shapes inconsistent with the stored config.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace catgen::model
