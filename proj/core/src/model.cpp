#include "mixagg/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "mixagg/errors.hpp"

namespace mixagg {

// ---------------------------------------------------------------------------
// Config

std::size_t MixVprConfig::hidden() const {
  return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(spatial())));
}

void MixVprConfig::validate() const {
  if (channels == 0 || height == 0 || width == 0) {
    throw ParamError("feature maps need c, h, w >= 1");
  }
  if (out_channels == 0 || out_rows == 0) throw ParamError("projection sizes d, r must be >= 1");
  if (!(mlp_ratio > 0.0) || hidden() == 0) {
    throw ParamError("mlp_ratio * n must be at least 1");
  }
}

std::string MixVprConfig::to_text() const {
  char ratio[32];
  std::snprintf(ratio, sizeof ratio, "%.17g", mlp_ratio);
  std::ostringstream out;
  out << "c=" << channels << '\n'
      << "h=" << height << '\n'
      << "w=" << width << '\n'
      << "L=" << mixer_depth << '\n'
      << "mlp_ratio=" << ratio << '\n'
      << "d=" << out_channels << '\n'
      << "r=" << out_rows << '\n';
  return out.str();
}

namespace {

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                     std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("'" + std::string(key) + "' expects a number, got '" + std::string(value) +
                     "'");
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool MixVprConfig::set(std::string_view key, std::string_view value) {
  if (key == "c") channels = parse_size(key, value);
  else if (key == "h") height = parse_size(key, value);
  else if (key == "w") width = parse_size(key, value);
  else if (key == "L") mixer_depth = parse_size(key, value);
  else if (key == "mlp_ratio") mlp_ratio = parse_real(key, value);
  else if (key == "d") out_channels = parse_size(key, value);
  else if (key == "r") out_rows = parse_size(key, value);
  else return false;
  return true;
}

MixVprConfig MixVprConfig::from_text(std::string_view text) {
  MixVprConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    const auto line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (!cfg.set(key, value)) throw ParseError("unknown model key '" + std::string(key) + "'");
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  cfg.validate();
  return cfg;
}

std::size_t count_block_params(const MixVprConfig& config) {
  const std::size_t n = config.spatial();
  const std::size_t hid = config.hidden();
  return 2 * n * hid + hid + n + 2 * n;
}

std::size_t count_head_params(const MixVprConfig& config) {
  const std::size_t n = config.spatial();
  return config.out_channels * config.channels + config.out_channels +
         config.out_rows * n + config.out_rows;
}

std::size_t count_params(const MixVprConfig& config) {
  return config.mixer_depth * count_block_params(config) + count_head_params(config);
}

// ---------------------------------------------------------------------------
// Parameters

template <typename T>
BasicMixVprParams<T>::BasicMixVprParams(const MixVprConfig& config) : config_(config) {
  config_.validate();
  const std::size_t n = config_.spatial();
  const std::size_t hid = config_.hidden();
  const std::size_t c = config_.channels;
  const std::size_t d = config_.out_channels;
  const std::size_t r = config_.out_rows;
  for (std::size_t l = 0; l < config_.mixer_depth; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    names_.push_back(p + "norm.gamma");
    tensors_.push_back(BasicTensor<T>::full({n}, T{1}));
    names_.push_back(p + "norm.beta");
    tensors_.emplace_back(Shape{n});
    names_.push_back(p + "fc1.weight");
    tensors_.emplace_back(Shape{hid, n});
    names_.push_back(p + "fc1.bias");
    tensors_.emplace_back(Shape{hid});
    names_.push_back(p + "fc2.weight");
    tensors_.emplace_back(Shape{n, hid});
    names_.push_back(p + "fc2.bias");
    tensors_.emplace_back(Shape{n});
  }
  names_.push_back("head.depth.weight");
  tensors_.emplace_back(Shape{d, c});
  names_.push_back("head.depth.bias");
  tensors_.emplace_back(Shape{d});
  names_.push_back("head.row.weight");
  tensors_.emplace_back(Shape{r, n});
  names_.push_back("head.row.bias");
  tensors_.emplace_back(Shape{r});
}

template <typename T>
BasicMixVprParams<T> BasicMixVprParams<T>::initialized(const MixVprConfig& config,
                                                       std::uint64_t seed) {
  BasicMixVprParams out(config);
  std::mt19937_64 rng(seed);
  const auto fill = [&rng](BasicTensor<T>& t, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.data()) v = static_cast<T>(dist(rng));
  };
  const std::size_t n = config.spatial();
  for (std::size_t l = 0; l < config.mixer_depth; ++l) {
    fill(out.block(l, BlockSlot::Fc1Weight), n);
    fill(out.block(l, BlockSlot::Fc1Bias), n);
    fill(out.block(l, BlockSlot::Fc2Weight), config.hidden());
    fill(out.block(l, BlockSlot::Fc2Bias), config.hidden());
  }
  fill(out.head(HeadSlot::DepthWeight), config.channels);
  fill(out.head(HeadSlot::DepthBias), config.channels);
  fill(out.head(HeadSlot::RowWeight), n);
  fill(out.head(HeadSlot::RowBias), n);
  return out;
}

template <typename T>
BasicTensor<T>& BasicMixVprParams<T>::block(std::size_t l, BlockSlot slot) {
  if (l >= config_.mixer_depth) {
    throw ShapeError("block " + std::to_string(l) + " out of range for L=" +
                     std::to_string(config_.mixer_depth));
  }
  return tensors_[l * kBlockSlots + static_cast<std::size_t>(slot)];
}

template <typename T>
const BasicTensor<T>& BasicMixVprParams<T>::block(std::size_t l, BlockSlot slot) const {
  return const_cast<BasicMixVprParams*>(this)->block(l, slot);
}

template <typename T>
BasicTensor<T>& BasicMixVprParams<T>::head(HeadSlot slot) {
  return tensors_[config_.mixer_depth * kBlockSlots + static_cast<std::size_t>(slot)];
}

template <typename T>
const BasicTensor<T>& BasicMixVprParams<T>::head(HeadSlot slot) const {
  return const_cast<BasicMixVprParams*>(this)->head(slot);
}

template <typename T>
void BasicMixVprParams<T>::assign(std::string_view name, BasicTensor<T> value) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] != name) continue;
    if (tensors_[i].dims() != value.dims()) {
      throw ShapeError("tensor '" + names_[i] + "' expects dims " + to_string(tensors_[i].dims()) +
                       ", got " + to_string(value.dims()));
    }
    tensors_[i] = std::move(value);
    return;
  }
  throw DataError("unknown parameter tensor '" + std::string(name) + "'");
}

template <typename T>
std::size_t BasicMixVprParams<T>::numel() const noexcept {
  std::size_t total = 0;
  for (const auto& t : tensors_) total += t.size();
  return total;
}

template <typename T>
std::vector<MixerBlockVars<T>> BoundParams<T>::blocks() const {
  std::vector<MixerBlockVars<T>> out;
  out.reserve(config.mixer_depth);
  for (std::size_t l = 0; l < config.mixer_depth; ++l) {
    const auto* b = &leaves[l * kBlockSlots];
    out.push_back({b[0], b[1], b[2], b[3], b[4], b[5]});
  }
  return out;
}

template <typename T>
HeadVars<T> BoundParams<T>::head() const {
  const auto* h = &leaves[config.mixer_depth * kBlockSlots];
  return {h[0], h[1], h[2], h[3]};
}

template <typename T>
std::vector<BasicTensor<T>> BoundParams<T>::grads() const {
  std::vector<BasicTensor<T>> out;
  out.reserve(leaves.size());
  for (const auto& l : leaves) out.push_back(l.grad());
  return out;
}

template <typename T>
BoundParams<T> bind(const BasicMixVprParams<T>& params, bool requires_grad) {
  BoundParams<T> out{params.config(), {}};
  out.leaves.reserve(params.tensor_count());
  for (const auto& t : params.tensors()) out.leaves.push_back(Var<T>::leaf(t, requires_grad));
  return out;
}

template <typename T>
BoundParams<T> bind(const MixVprConfig& config, std::vector<Var<T>> leaves) {
  const BasicMixVprParams<T> shape_ref(config);
  if (leaves.size() != shape_ref.tensor_count()) {
    throw ShapeError("expected " + std::to_string(shape_ref.tensor_count()) +
                     " parameter tensors, got " + std::to_string(leaves.size()));
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].dims() != shape_ref.tensors()[i].dims()) {
      throw ShapeError("parameter '" + shape_ref.names()[i] + "' expects dims " +
                       to_string(shape_ref.tensors()[i].dims()) + ", got " +
                       to_string(leaves[i].dims()));
    }
  }
  return BoundParams<T>{config, std::move(leaves)};
}

// ---------------------------------------------------------------------------
// Forward pass

template <typename T>
BasicTensor<T> flatten_maps(const BasicTensor<T>& maps) {
  if (maps.rank() == 3) {
    return maps.reshaped({maps.dim(0), maps.dim(1) * maps.dim(2)});
  }
  if (maps.rank() == 2) return maps;
  throw ShapeError("feature maps must be c x h x w or c x n, got dims " + to_string(maps.dims()));
}

template <typename T>
Var<T> feature_mixer_block(const Var<T>& x, const MixerBlockVars<T>& block) {
  const std::size_t n = x.value().cols();
  if (block.fc1_weight.value().cols() != n || block.fc2_weight.value().rows() != n) {
    throw ShapeError("mixer block expects rows of length " +
                     std::to_string(block.fc1_weight.value().cols()) + ", input has dims " +
                     to_string(x.dims()));
  }
  const auto normed = layer_norm(x, block.gamma, block.beta, static_cast<T>(kLayerNormEps));
  const auto hidden = relu(add_row_bias(matmul(normed, transpose(block.fc1_weight)), block.fc1_bias));
  const auto mixed = add_row_bias(matmul(hidden, transpose(block.fc2_weight)), block.fc2_bias);
  return add(x, mixed);
}

template <typename T>
Var<T> mixer_stack(const Var<T>& x, std::span<const MixerBlockVars<T>> blocks) {
  Var<T> z = x;
  for (const auto& b : blocks) z = feature_mixer_block(z, b);
  return z;
}

namespace {

template <typename T>
void check_head_dims(const Var<T>& z, const HeadVars<T>& head) {
  if (z.value().rank() != 2) {
    throw ShapeError("projection head expects a c x n matrix, got dims " + to_string(z.dims()));
  }
  const std::size_t c = z.value().rows(), n = z.value().cols();
  if (head.depth_weight.value().cols() != c) {
    throw ShapeError("channel axis mismatch: depth projection expects c=" +
                     std::to_string(head.depth_weight.value().cols()) + ", input has c=" +
                     std::to_string(c));
  }
  if (head.row_weight.value().cols() != n) {
    throw ShapeError("spatial axis mismatch: row projection expects n=" +
                     std::to_string(head.row_weight.value().cols()) + ", input has n=" +
                     std::to_string(n));
  }
}

// depth_t: c x d, row_t: n x r (pre-transposed weights shared across a batch)
template <typename T>
Var<T> project(const Var<T>& z, const Var<T>& depth_t, const Var<T>& depth_bias,
               const Var<T>& row_t, const Var<T>& row_bias) {
  const auto zd = add_row_bias(matmul(transpose(z), depth_t), depth_bias);  // n x d
  return add_row_bias(matmul(transpose(zd), row_t), row_bias);             // d x r
}

}  // namespace

template <typename T>
Var<T> projection_head(const Var<T>& z, const HeadVars<T>& head) {
  check_head_dims(z, head);
  return project(z, transpose(head.depth_weight), head.depth_bias, transpose(head.row_weight),
                 head.row_bias);
}

template <typename T>
Var<T> aggregate_batch(const BoundParams<T>& params, std::span<const BasicTensor<T>* const> inputs) {
  if (inputs.empty()) throw ContractError("aggregate_batch needs at least one input");
  const auto& cfg = params.config;
  const std::size_t c = cfg.channels, n = cfg.spatial();
  std::vector<Var<T>> rows;
  rows.reserve(inputs.size());
  for (const auto* in : inputs) {
    auto flat = flatten_maps(*in);
    if (flat.rows() != c) {
      throw ShapeError("channel axis mismatch: model expects c=" + std::to_string(c) +
                       ", input dims " + to_string(in->dims()));
    }
    if (flat.cols() != n) {
      throw ShapeError("spatial axis mismatch: model expects h*w=" + std::to_string(n) +
                       ", input dims " + to_string(in->dims()));
    }
    rows.push_back(Var<T>::constant(std::move(flat)));
  }
  // Every channel row passes through the same MLP, so the whole batch is
  // mixed as one (B*c) x n matrix.
  const auto stacked = inputs.size() == 1 ? rows.front() : concat_rows(rows);
  const auto blocks = params.blocks();
  const auto z = mixer_stack<T>(stacked, blocks);

  const auto head = params.head();
  check_head_dims(inputs.size() == 1 ? z : slice_rows(z, 0, c), head);
  const auto depth_t = transpose(head.depth_weight);
  const auto row_t = transpose(head.row_weight);
  std::vector<Var<T>> descriptors;
  descriptors.reserve(inputs.size());
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const auto zb = inputs.size() == 1 ? z : slice_rows(z, b * c, (b + 1) * c);
    const auto o = project(zb, depth_t, head.depth_bias, row_t, head.row_bias);
    descriptors.push_back(reshape(o, {1, cfg.descriptor_dim()}));
  }
  const auto all = descriptors.size() == 1 ? descriptors.front() : concat_rows(descriptors);
  return l2_normalize_rows(all);
}

template <typename T>
BasicTensor<T> aggregate(const BasicTensor<T>& maps, const BasicMixVprParams<T>& params) {
  const auto bound = bind(params, false);
  const BasicTensor<T>* inputs[] = {&maps};
  const auto out = aggregate_batch<T>(bound, inputs);
  return out.value().reshaped({params.config().descriptor_dim()});
}

#define MIXAGG_INSTANTIATE_MODEL(T)                                                            \
  template class BasicMixVprParams<T>;                                                         \
  template struct BoundParams<T>;                                                              \
  template BoundParams<T> bind(const BasicMixVprParams<T>&, bool);                             \
  template BoundParams<T> bind(const MixVprConfig&, std::vector<Var<T>>);                      \
  template BasicTensor<T> flatten_maps(const BasicTensor<T>&);                                 \
  template Var<T> feature_mixer_block(const Var<T>&, const MixerBlockVars<T>&);                \
  template Var<T> mixer_stack(const Var<T>&, std::span<const MixerBlockVars<T>>);              \
  template Var<T> projection_head(const Var<T>&, const HeadVars<T>&);                          \
  template Var<T> aggregate_batch(const BoundParams<T>&, std::span<const BasicTensor<T>* const>); \
  template BasicTensor<T> aggregate(const BasicTensor<T>&, const BasicMixVprParams<T>&);

MIXAGG_INSTANTIATE_MODEL(float)
MIXAGG_INSTANTIATE_MODEL(double)

#undef MIXAGG_INSTANTIATE_MODEL

}  // namespace mixagg
