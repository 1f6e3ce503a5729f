#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mixagg/model.hpp"
#include "mixagg/ms_loss.hpp"
#include "mixagg/optim.hpp"
#include "mixagg/sampler.hpp"

namespace mixagg {

/// Everything `fit` needs, loaded from a flat key=value file.
///
/// Keys: seed, P, K, lr, momentum, wd, epochs, steps_per_epoch,
/// lr_decay_every, lr_divisor, alpha, beta, lambda, epsilon, and the model
/// keys L, c, h, w, d, r, mlp_ratio. '#' starts a comment line. Unknown or
/// repeated keys are errors.
struct TrainConfig {
  std::uint64_t seed = 0;
  BatchSpec batch;
  OptimState optim;
  std::size_t epochs = 30;
  /// 0 means one pass over the places: max(1, places / P) batches.
  std::size_t steps_per_epoch = 0;
  MsLossConfig loss;
  MixVprConfig model;

  void validate() const;
  /// Canonical text with every key; parse(to_text()) reproduces the config.
  std::string to_text() const;
  static TrainConfig parse(std::string_view text);
  static TrainConfig load(const std::filesystem::path& path);
};

}  // namespace mixagg
