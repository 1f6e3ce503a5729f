#include "mixagg/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "mixagg/errors.hpp"

namespace mixagg {
namespace io {

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 8);
}

void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw IoError(std::string("truncated input while reading ") + what);
  }
}

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_exact(in, reinterpret_cast<char*>(b), 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  read_exact(in, reinterpret_cast<char*>(b), 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace io

void write_tensor(std::ostream& out, const Tensor& tensor) {
  if (tensor.empty()) throw ShapeError("cannot serialize an empty tensor");
  out.write(kTensorMagic, 4);
  io::write_u32(out, static_cast<std::uint32_t>(tensor.rank()));
  for (auto d : tensor.dims()) io::write_u64(out, d);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(float)));
  } else {
    for (float v : tensor.data()) io::write_f32(out, v);
  }
  if (!out) throw IoError("failed writing tensor payload");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  io::read_exact(in, magic, 4, "tensor magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) throw IoError("bad tensor magic (expected MXT1)");
  const std::uint32_t rank = io::read_u32(in, "tensor rank");
  if (rank == 0 || rank > 8) throw IoError("unsupported tensor rank " + std::to_string(rank));
  Shape dims(rank);
  std::uint64_t numel = 1;
  for (auto& d : dims) {
    const std::uint64_t v = io::read_u64(in, "tensor dims");
    if (v == 0) throw IoError("tensor file has a zero dimension");
    if (numel > std::numeric_limits<std::uint32_t>::max() / v) {
      throw IoError("tensor file dims are implausibly large");
    }
    numel *= v;
    d = static_cast<std::size_t>(v);
  }
  std::vector<float> data(numel);
  io::read_exact(in, reinterpret_cast<char*>(data.data()), numel * sizeof(float),
                 "tensor payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : data) {
      const auto u = std::bit_cast<std::uint32_t>(v);
      v = std::bit_cast<float>((u >> 24) | ((u >> 8) & 0xFF00u) | ((u << 8) & 0xFF0000u) |
                               (u << 24));
    }
  }
  return Tensor(std::move(dims), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_tensor(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace mixagg
