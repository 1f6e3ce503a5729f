#include "mixagg/feature_store.hpp"

#include "mixagg/errors.hpp"
#include "mixagg/tensor_io.hpp"

namespace mixagg {

FeatureStore::FeatureStore(Manifest manifest)
    : manifest_(std::move(manifest)), cache_(manifest_.size()) {}

FeatureStore::FeatureStore(Manifest manifest, std::vector<Tensor> tensors)
    : manifest_(std::move(manifest)) {
  if (tensors.size() != manifest_.size()) {
    throw DataError("feature store got " + std::to_string(tensors.size()) + " tensors for " +
                    std::to_string(manifest_.size()) + " records");
  }
  cache_.reserve(tensors.size());
  for (auto& t : tensors) cache_.emplace_back(std::move(t));
}

const Tensor& FeatureStore::get(std::size_t record) {
  if (record >= cache_.size()) {
    throw DataError("record index " + std::to_string(record) + " out of range");
  }
  auto& slot = cache_[record];
  if (!slot) slot = load_tensor(manifest_.tensor_path(record));
  return *slot;
}

void FeatureStore::preload() {
  for (std::size_t i = 0; i < cache_.size(); ++i) get(i);
}

}  // namespace mixagg
