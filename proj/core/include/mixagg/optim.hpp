#pragma once

#include <span>
#include <vector>

#include "mixagg/tensor.hpp"

namespace mixagg {

/// SGD with momentum, coupled weight decay and a step learning-rate
/// schedule (divide by lr_divisor every lr_decay_every epochs).
struct OptimState {
  double base_lr = 0.05;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.001;
  std::size_t lr_decay_every = 5;
  double lr_divisor = 3.0;
  std::size_t max_epochs = 30;
  std::size_t epoch = 0;
  std::vector<Tensor> velocity;  // lazily sized to the parameter list

  /// Throws ParamError on non-positive lr, negative momentum or decay.
  void validate() const;
};

/// base_lr / lr_divisor^floor(epoch / lr_decay_every)
double lr_schedule(const OptimState& state, std::size_t epoch);

/// v <- momentum * v + g + weight_decay * theta;  theta <- theta - lr * v.
/// Throws NumericError naming the first parameter with a non-finite
/// gradient; nothing is updated in that case.
void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads, OptimState& state);

}  // namespace mixagg
