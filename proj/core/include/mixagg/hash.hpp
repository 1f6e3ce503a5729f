#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mixagg {

/// 64-bit FNV-1a; stable across platforms and runs.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;
/// fnv1a64 as 16 lowercase hex digits.
std::string config_hash(std::string_view text);

}  // namespace mixagg
