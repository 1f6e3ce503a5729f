#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mixagg/model.hpp"

namespace mixagg {

// MXC1 layout, integers little-endian:
//   "MXC1" | u32 version | u32 entry count
//   entry count x (u32 name length | utf-8 name | MXT1 tensor)
//   u32 config length | config text (MixVprConfig::to_text)
inline constexpr char kCheckpointMagic[4] = {'M', 'X', 'C', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const MixVprParams& params);
MixVprParams read_checkpoint(std::istream& in);

void save_checkpoint(const MixVprParams& params, const std::filesystem::path& path);
/// Throws IoError on bad magic, unsupported version, or truncation.
MixVprParams load_checkpoint(const std::filesystem::path& path);
/// Loads tensors into a model of the given shape; a tensor whose dims
/// disagree raises ShapeError naming it.
MixVprParams load_checkpoint(const std::filesystem::path& path, const MixVprConfig& expected);

}  // namespace mixagg
