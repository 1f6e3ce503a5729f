#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mixagg/feature_store.hpp"
#include "mixagg/model.hpp"
#include "mixagg/train_config.hpp"

namespace mixagg {

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global step index
  double loss = 0.0;
};

struct FitOptions {
  /// Starting weights; by default initialized from the config seed.
  std::optional<MixVprParams> init;
  /// Written after the last step when set.
  std::optional<std::filesystem::path> checkpoint_out;
  std::function<void(const LossRecord&)> on_step;
};

struct FitResult {
  MixVprParams params;
  std::vector<LossRecord> curve;
  std::vector<double> epoch_mean_loss;
};

std::size_t effective_steps_per_epoch(const TrainConfig& config, const Manifest& manifest);

/// Runs epochs x steps_per_epoch iterations of
/// sample_batch -> aggregate_batch -> ms_loss -> backward -> sgd_step,
/// with the learning rate from lr_schedule at each epoch. Deterministic for
/// a given config. Throws NumericError naming the epoch and step if the
/// loss turns non-finite.
FitResult fit(FeatureStore& store, const TrainConfig& config, const FitOptions& options = {});

/// CSV with header "epoch,step,loss".
void write_loss_curve(std::ostream& out, const std::vector<LossRecord>& curve);

}  // namespace mixagg
