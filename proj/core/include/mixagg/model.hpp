#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixagg/autograd.hpp"

namespace mixagg {

inline constexpr double kLayerNormEps = 1e-5;

/// Shape of the aggregation network. Field comments give the conventional
/// symbol used in config files.
struct MixVprConfig {
  std::size_t channels = 1024;     // c
  std::size_t height = 20;         // h
  std::size_t width = 20;          // w
  std::size_t mixer_depth = 4;     // L, 0 disables the mixer
  double mlp_ratio = 1.0;          // hidden width / (h*w)
  std::size_t out_channels = 1024; // d, depth-wise projection size
  std::size_t out_rows = 4;        // r, row-wise projection size

  std::size_t spatial() const noexcept { return height * width; }
  std::size_t hidden() const;
  std::size_t descriptor_dim() const noexcept { return out_channels * out_rows; }

  /// Throws ParamError on non-positive sizes.
  void validate() const;

  /// "key=value" lines with keys c, h, w, L, mlp_ratio, d, r.
  std::string to_text() const;
  static MixVprConfig from_text(std::string_view text);
  /// Applies one key; returns false if the key is not a model key.
  bool set(std::string_view key, std::string_view value);

  friend bool operator==(const MixVprConfig&, const MixVprConfig&) = default;
};

/// Closed-form parameter counts.
std::size_t count_block_params(const MixVprConfig& config);
std::size_t count_head_params(const MixVprConfig& config);
std::size_t count_params(const MixVprConfig& config);

enum class BlockSlot : std::size_t { NormGamma, NormBeta, Fc1Weight, Fc1Bias, Fc2Weight, Fc2Bias };
enum class HeadSlot : std::size_t { DepthWeight, DepthBias, RowWeight, RowBias };
inline constexpr std::size_t kBlockSlots = 6;
inline constexpr std::size_t kHeadSlots = 4;

/// Every learnable tensor of the model, stored as an ordered name table:
/// six tensors per mixer block followed by the four projection-head
/// tensors. The order is the checkpoint order and the optimizer order.
template <typename T>
class BasicMixVprParams {
 public:
  /// Zero weights and biases, unit LayerNorm gain.
  explicit BasicMixVprParams(const MixVprConfig& config);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every affine weight and
  /// bias, drawn in table order from one seeded stream.
  static BasicMixVprParams initialized(const MixVprConfig& config, std::uint64_t seed);

  const MixVprConfig& config() const noexcept { return config_; }
  std::size_t tensor_count() const noexcept { return tensors_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<BasicTensor<T>>& tensors() noexcept { return tensors_; }
  const std::vector<BasicTensor<T>>& tensors() const noexcept { return tensors_; }

  BasicTensor<T>& block(std::size_t l, BlockSlot slot);
  const BasicTensor<T>& block(std::size_t l, BlockSlot slot) const;
  BasicTensor<T>& head(HeadSlot slot);
  const BasicTensor<T>& head(HeadSlot slot) const;

  /// Replaces the tensor called `name`; throws ShapeError naming the tensor
  /// if dims differ, DataError if the name is unknown.
  void assign(std::string_view name, BasicTensor<T> value);

  /// Sum of tensor sizes, tallied from the stored tensors.
  std::size_t numel() const noexcept;

  template <typename U>
  BasicMixVprParams<U> cast() const {
    BasicMixVprParams<U> out(config_);
    for (std::size_t i = 0; i < tensors_.size(); ++i) out.tensors()[i] = tensors_[i].template cast<U>();
    return out;
  }

  friend bool operator==(const BasicMixVprParams& a, const BasicMixVprParams& b) {
    return a.config_ == b.config_ && a.tensors_ == b.tensors_;
  }

 private:
  MixVprConfig config_;
  std::vector<std::string> names_;
  std::vector<BasicTensor<T>> tensors_;
};

using MixVprParams = BasicMixVprParams<float>;
using MixVprParams64 = BasicMixVprParams<double>;

template <typename T>
struct MixerBlockVars {
  Var<T> gamma, beta, fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

template <typename T>
struct HeadVars {
  Var<T> depth_weight, depth_bias, row_weight, row_bias;
};

/// Parameters lifted into graph leaves, in table order.
template <typename T>
struct BoundParams {
  MixVprConfig config;
  std::vector<Var<T>> leaves;

  std::vector<MixerBlockVars<T>> blocks() const;
  HeadVars<T> head() const;
  /// Gradients of every leaf, in table order.
  std::vector<BasicTensor<T>> grads() const;
};

template <typename T>
BoundParams<T> bind(const BasicMixVprParams<T>& params, bool requires_grad);
/// Wraps caller-owned leaves (e.g. from a gradient checker).
template <typename T>
BoundParams<T> bind(const MixVprConfig& config, std::vector<Var<T>> leaves);

/// c x h x w feature maps to c x (h*w), each map flattened row-major.
/// Already-flattened c x n input passes through.
template <typename T>
BasicTensor<T> flatten_maps(const BasicTensor<T>& maps);

/// One residual MLP over the spatial axis, shared by every channel row:
/// x + W2 relu(W1 layer_norm(x) + b1) + b2.
template <typename T>
Var<T> feature_mixer_block(const Var<T>& x, const MixerBlockVars<T>& block);

/// Applies the blocks in order; an empty span is the identity.
template <typename T>
Var<T> mixer_stack(const Var<T>& x, std::span<const MixerBlockVars<T>> blocks);

/// Depth-wise projection of the transposed c x n input to d x n, then
/// row-wise projection to d x r.
template <typename T>
Var<T> projection_head(const Var<T>& z, const HeadVars<T>& head);

/// Full pipeline for a batch of feature maps; row b of the B x (d*r)
/// result is the unit-norm descriptor of inputs[b].
template <typename T>
Var<T> aggregate_batch(const BoundParams<T>& params, std::span<const BasicTensor<T>* const> inputs);

/// Single-input inference; returns a {d*r} unit-norm descriptor.
template <typename T>
BasicTensor<T> aggregate(const BasicTensor<T>& maps, const BasicMixVprParams<T>& params);

}  // namespace mixagg
