#pragma once

#include <random>
#include <vector>

#include "mixagg/manifest.hpp"

namespace mixagg {

/// P places per batch, K images each.
struct BatchSpec {
  std::size_t places = 8;
  std::size_t images_per_place = 4;

  std::size_t size() const noexcept { return places * images_per_place; }
};

struct BatchItem {
  std::size_t record;  // manifest record index
  std::size_t label;   // manifest place index
};

/// Draws P distinct places among those with at least K images, then K
/// distinct images of each, and shuffles the result. Throws DataError naming
/// the deficit when the manifest cannot supply a full batch.
std::vector<BatchItem> sample_batch(const Manifest& manifest, const BatchSpec& spec,
                                    std::mt19937_64& rng);

}  // namespace mixagg
