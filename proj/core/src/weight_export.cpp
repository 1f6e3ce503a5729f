#include "mixagg/weight_export.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "mixagg/errors.hpp"

namespace mixagg {

std::vector<std::filesystem::path> export_first_layer_weights(
    const MixVprParams& params, const std::filesystem::path& out_dir,
    std::optional<std::size_t> count) {
  const auto& cfg = params.config();
  if (cfg.mixer_depth == 0) throw ContractError("model has no mixer block to export");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const auto& weight = params.block(0, BlockSlot::Fc1Weight);
  const std::size_t neurons = std::min(weight.rows(), count.value_or(weight.rows()));
  std::vector<std::filesystem::path> written;
  written.reserve(neurons);
  std::vector<unsigned char> pixels(cfg.spatial());
  for (std::size_t k = 0; k < neurons; ++k) {
    const auto row = weight.row(k);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double scaled = range > 0.0 ? (row[j] - *lo) / range * 255.0 : 0.0;
      pixels[j] = static_cast<unsigned char>(std::lround(std::clamp(scaled, 0.0, 255.0)));
    }
    const auto path = out_dir / ("neuron_" + std::to_string(k) + ".pgm");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << cfg.width << ' ' << cfg.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    if (!out) throw IoError("failed writing " + path.string());
    written.push_back(path);
  }
  return written;
}

}  // namespace mixagg
