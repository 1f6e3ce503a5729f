#pragma once

#include <optional>
#include <vector>

#include "mixagg/manifest.hpp"
#include "mixagg/tensor.hpp"

namespace mixagg {

/// Feature maps of a manifest's records, loaded from MXT1 files on first
/// use and cached. Not thread-safe; one owner per training or extraction
/// loop.
class FeatureStore {
 public:
  explicit FeatureStore(Manifest manifest);
  /// In-memory store; tensors[i] belongs to manifest record i.
  FeatureStore(Manifest manifest, std::vector<Tensor> tensors);

  const Manifest& manifest() const noexcept { return manifest_; }
  std::size_t size() const noexcept { return manifest_.size(); }

  const Tensor& get(std::size_t record);
  void preload();

 private:
  Manifest manifest_;
  std::vector<std::optional<Tensor>> cache_;
};

}  // namespace mixagg
