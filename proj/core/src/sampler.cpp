#include "mixagg/sampler.hpp"

#include <algorithm>

#include "mixagg/errors.hpp"

namespace mixagg {

std::vector<BatchItem> sample_batch(const Manifest& manifest, const BatchSpec& spec,
                                    std::mt19937_64& rng) {
  if (spec.places == 0 || spec.images_per_place == 0) throw ParamError("batch needs P, K >= 1");
  std::vector<std::size_t> eligible;
  for (std::size_t p = 0; p < manifest.places().size(); ++p) {
    if (manifest.place_members()[p].size() >= spec.images_per_place) eligible.push_back(p);
  }
  if (eligible.size() < spec.places) {
    throw DataError("batch needs " + std::to_string(spec.places) + " places with at least " +
                    std::to_string(spec.images_per_place) + " images, manifest has " +
                    std::to_string(eligible.size()) + " (short by " +
                    std::to_string(spec.places - eligible.size()) + ")");
  }
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<BatchItem> batch;
  batch.reserve(spec.size());
  for (std::size_t i = 0; i < spec.places; ++i) {
    const std::size_t place = eligible[i];
    auto members = manifest.place_members()[place];
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t k = 0; k < spec.images_per_place; ++k) batch.push_back({members[k], place});
  }
  std::shuffle(batch.begin(), batch.end(), rng);
  return batch;
}

}  // namespace mixagg
