#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "mixagg/tensor.hpp"

namespace mixagg {

// MXT1 layout, all little-endian:
//   "MXT1" | u32 rank | rank x u64 dims | prod(dims) x f32 (row-major)
inline constexpr char kTensorMagic[4] = {'M', 'X', 'T', '1'};

void write_tensor(std::ostream& out, const Tensor& tensor);
/// Throws IoError on wrong magic, zero rank or dims, or a short payload.
Tensor read_tensor(std::istream& in);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_tensor(const std::filesystem::path& path);

namespace io {

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
std::uint32_t read_u32(std::istream& in, const char* what);
std::uint64_t read_u64(std::istream& in, const char* what);
void read_exact(std::istream& in, char* dst, std::size_t n, const char* what);

}  // namespace io
}  // namespace mixagg
