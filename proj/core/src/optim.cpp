#include "mixagg/optim.hpp"

#include <cmath>
#include <string>

#include "mixagg/errors.hpp"

namespace mixagg {

void OptimState::validate() const {
  if (!(base_lr > 0.0) || !(lr > 0.0)) throw ParamError("learning rate must be > 0");
  if (!(momentum >= 0.0)) throw ParamError("momentum must be >= 0");
  if (!(weight_decay >= 0.0)) throw ParamError("weight decay must be >= 0");
  if (lr_decay_every == 0) throw ParamError("lr_decay_every must be >= 1");
  if (!(lr_divisor >= 1.0)) throw ParamError("lr_divisor must be >= 1");
}

double lr_schedule(const OptimState& state, std::size_t epoch) {
  const auto drops = static_cast<double>(epoch / state.lr_decay_every);
  return state.base_lr / std::pow(state.lr_divisor, drops);
}

void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads, OptimState& state) {
  if (params.size() != grads.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " params but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].dims() != params[i].dims()) {
      throw ShapeError("sgd_step: gradient " + std::to_string(i) + " dims " +
                       to_string(grads[i].dims()) + " vs param " + to_string(params[i].dims()));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("non-finite gradient for parameter " + std::to_string(i) +
                         "; training halted");
    }
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.clear();
    for (const auto& p : params) state.velocity.emplace_back(p.dims());
  }
  const float m = static_cast<float>(state.momentum);
  const float wd = static_cast<float>(state.weight_decay);
  const float lr = static_cast<float>(state.lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].data();
    auto v = state.velocity[i].data();
    const auto g = grads[i].data();
    for (std::size_t j = 0; j < theta.size(); ++j) {
      v[j] = m * v[j] + g[j] + wd * theta[j];
      theta[j] -= lr * v[j];
    }
  }
}

}  // namespace mixagg
