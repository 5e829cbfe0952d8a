#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedleak/models.hpp"

namespace fedleak {

// Binary layout, all integers little-endian:
//   "FLGM" | version u16 | tensor count u32 |
//   per tensor: name length u16, UTF-8 name, rank u8, extents u32 x rank,
//               payload f32 x numel (IEEE-754 little-endian)
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
ParamSet decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);
/// Also checks names and shapes against `layout`; mismatch -> CheckpointError.
ParamSet load_checkpoint(const std::filesystem::path& path, const ParamSet& layout);

}  // namespace fedleak
