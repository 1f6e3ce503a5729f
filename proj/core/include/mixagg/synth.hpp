#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mixagg/geo.hpp"
#include "mixagg/manifest.hpp"
#include "mixagg/tensor.hpp"

namespace mixagg {

struct SynthOptions {
  std::size_t places = 16;
  std::size_t views = 4;
  std::size_t channels = 32;
  std::size_t height = 4;
  std::size_t width = 4;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 64;
  double noise_variance = 0.1;
  /// Grid spacing between neighbouring places.
  double place_spacing_m = 150.0;
  /// Views are scattered uniformly in a disc of this radius around the place.
  double view_jitter_m = 4.0;
  GeoPoint origin{47.3769, 8.5417};
};

struct SynthData {
  Manifest manifest;              // tensor paths are "tensors/<id>.mxt"
  std::vector<Tensor> tensors;    // aligned with manifest records, c x h x w
  std::vector<GeoPoint> place_centers;
  /// Fraction of views whose least-squares latent estimate is nearest to
  /// their own place latent.
  double latent_oracle_accuracy = 0.0;
};

/// Place p has latent z_p ~ N(0, I); a fixed linear map G with
/// N(0, 1/latent_dim) entries lifts it to c*h*w features, and each view adds
/// N(0, noise_variance) noise. Places sit on a square grid, views jitter
/// around them. Fully determined by the options.
SynthData synth_build(const SynthOptions& options);

/// synth_build() plus MXT1 files under out_dir/tensors and
/// out_dir/manifest.jsonl. Returns the data with the manifest rooted at
/// out_dir.
SynthData synth_generate(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace mixagg
