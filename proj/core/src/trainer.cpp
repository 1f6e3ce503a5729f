#include "mixagg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mixagg/checkpoint.hpp"
#include "mixagg/errors.hpp"
#include "mixagg/ms_loss.hpp"

namespace mixagg {
namespace {

// Separate stream for batch sampling so changing the model shape does not
// change which batches are drawn.
constexpr std::uint64_t kSamplerStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::size_t effective_steps_per_epoch(const TrainConfig& config, const Manifest& manifest) {
  if (config.steps_per_epoch != 0) return config.steps_per_epoch;
  return std::max<std::size_t>(1, manifest.places().size() / config.batch.places);
}

FitResult fit(FeatureStore& store, const TrainConfig& config, const FitOptions& options) {
  config.validate();
  const auto& manifest = store.manifest();
  FitResult result{options.init ? *options.init : MixVprParams::initialized(config.model, config.seed),
                   {}, {}};
  if (result.params.config() != config.model) {
    throw ContractError("initial parameters do not match the configured model shape");
  }

  OptimState state = config.optim;
  state.max_epochs = config.epochs;
  std::mt19937_64 rng(config.seed ^ kSamplerStream);
  const std::size_t steps = effective_steps_per_epoch(config, manifest);
  std::size_t global_step = 0;
  std::vector<std::size_t> labels;
  std::vector<const Tensor*> inputs;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    state.epoch = epoch;
    state.lr = lr_schedule(state, epoch);
    double epoch_total = 0.0;
    for (std::size_t s = 0; s < steps; ++s, ++global_step) {
      const auto batch = sample_batch(manifest, config.batch, rng);
      labels.clear();
      inputs.clear();
      for (const auto& item : batch) {
        labels.push_back(item.label);
        inputs.push_back(&store.get(item.record));
      }
      const auto bound = bind(result.params, true);
      const auto where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(global_step);
      Var<float> loss;
      try {
        loss = ms_loss(aggregate_batch<float>(bound, inputs), labels, config.loss);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at " + where);
      }
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw NumericError("non-finite loss at " + where);
      backward(loss);
      const auto grads = bound.grads();
      for (const auto& g : grads) {
        for (const float v : g.data()) {
          if (!std::isfinite(v)) throw NumericError("non-finite gradient at " + where);
        }
      }
      sgd_step(result.params.tensors(), grads, state);

      LossRecord record{epoch, global_step, value};
      result.curve.push_back(record);
      if (options.on_step) options.on_step(record);
      epoch_total += value;
    }
    result.epoch_mean_loss.push_back(epoch_total / static_cast<double>(steps));
  }

  if (options.checkpoint_out) save_checkpoint(result.params, *options.checkpoint_out);
  return result;
}

void write_loss_curve(std::ostream& out, const std::vector<LossRecord>& curve) {
  out << "epoch,step,loss\n";
  char buf[64];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof buf, "%.9g", r.loss);
    out << r.epoch << ',' << r.step << ',' << buf << '\n';
  }
}

}  // namespace mixagg
