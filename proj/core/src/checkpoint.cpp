#include "mixagg/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mixagg/errors.hpp"
#include "mixagg/tensor_io.hpp"

namespace mixagg {
namespace {

struct RawCheckpoint {
  MixVprConfig config;
  std::vector<std::pair<std::string, Tensor>> entries;
};

constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxConfigLength = 1 << 20;

RawCheckpoint read_raw(std::istream& in) {
  char magic[4];
  io::read_exact(in, magic, 4, "checkpoint magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw IoError("bad checkpoint magic (expected MXC1)");
  }
  const std::uint32_t version = io::read_u32(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = io::read_u32(in, "checkpoint table length");
  RawCheckpoint raw;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = io::read_u32(in, "tensor name length");
    if (len == 0 || len > kMaxNameLength) throw IoError("implausible tensor name length");
    std::string name(len, '\0');
    io::read_exact(in, name.data(), len, "tensor name");
    raw.entries.emplace_back(std::move(name), read_tensor(in));
  }
  const std::uint32_t cfg_len = io::read_u32(in, "config record length");
  if (cfg_len > kMaxConfigLength) throw IoError("implausible config record length");
  std::string text(cfg_len, '\0');
  io::read_exact(in, text.data(), cfg_len, "config record");
  raw.config = MixVprConfig::from_text(text);
  return raw;
}

MixVprParams assemble(const MixVprConfig& config, RawCheckpoint raw) {
  MixVprParams params(config);
  if (raw.entries.size() != params.tensor_count()) {
    throw DataError("checkpoint holds " + std::to_string(raw.entries.size()) +
                    " tensors, model expects " + std::to_string(params.tensor_count()));
  }
  for (auto& [name, tensor] : raw.entries) params.assign(name, std::move(tensor));
  return params;
}

RawCheckpoint read_raw_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_raw(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const MixVprParams& params) {
  out.write(kCheckpointMagic, 4);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<std::uint32_t>(params.tensor_count()));
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    const auto& name = params.names()[i];
    io::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, params.tensors()[i]);
  }
  const auto text = params.config().to_text();
  io::write_u32(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing checkpoint");
}

MixVprParams read_checkpoint(std::istream& in) {
  auto raw = read_raw(in);
  const auto config = raw.config;
  return assemble(config, std::move(raw));
}

void save_checkpoint(const MixVprParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
}

MixVprParams load_checkpoint(const std::filesystem::path& path) {
  auto raw = read_raw_file(path);
  const auto config = raw.config;
  return assemble(config, std::move(raw));
}

MixVprParams load_checkpoint(const std::filesystem::path& path, const MixVprConfig& expected) {
  return assemble(expected, read_raw_file(path));
}

}  // namespace mixagg
