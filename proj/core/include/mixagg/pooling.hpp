#pragma once

#include "mixagg/autograd.hpp"

namespace mixagg {

/// Activations are clamped to this floor before the GeM power.
inline constexpr double kGemClampFloor = 1e-6;

/// Global average pooling baseline: per-channel mean over h*w, L2-normalized.
/// Returns a {c} descriptor.
template <typename T>
BasicTensor<T> avg_pool(const BasicTensor<T>& maps);

/// Generalized-mean pooling over the rows of a c x n matrix:
/// (mean(max(x, floor)^p))^(1/p) per row, as a {1, c} tensor.
/// Differentiable in x and in the {1}-shaped exponent p. Throws ParamError
/// if p < 1.
template <typename T>
Var<T> gem(const Var<T>& x, const Var<T>& p);

/// GeM baseline descriptor: gem() followed by L2 normalization. Returns {c}.
template <typename T>
BasicTensor<T> gem_pool(const BasicTensor<T>& maps, T p);

}  // namespace mixagg
