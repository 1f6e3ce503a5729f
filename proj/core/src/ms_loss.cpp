#include "mixagg/ms_loss.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

#include <spdlog/spdlog.h>

#include "mixagg/errors.hpp"

namespace mixagg {

void MsLossConfig::validate() const {
  if (!(alpha > 0.0)) throw ParamError("MS loss alpha must be > 0");
  if (!(beta > 0.0)) throw ParamError("MS loss beta must be > 0");
  if (!(epsilon >= 0.0)) throw ParamError("MS loss epsilon must be >= 0");
  if (!std::isfinite(lambda)) throw ParamError("MS loss lambda must be finite");
}

namespace {

void check_labels(std::size_t batch, std::span<const std::size_t> labels) {
  if (labels.size() != batch) {
    throw ContractError("MS loss got " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(batch) + " descriptors");
  }
  const std::set<std::size_t> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ContractError("MS loss needs at least two labels in a batch");
}

// log(1 + sum exp(x_k)) and the weights exp(x_k) / (1 + sum exp(x)), stable
// for large exponents.
template <typename T>
T soft_plus_sum(const std::vector<T>& x, std::vector<T>& weights) {
  T m{0};
  for (auto v : x) m = std::max(m, v);
  T denom = std::exp(-m);
  weights.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    weights[k] = std::exp(x[k] - m);
    denom += weights[k];
  }
  for (auto& w : weights) w /= denom;
  return m + std::log(denom);
}

}  // namespace

template <typename T>
std::vector<MinedPairs> mine_pairs(const BasicTensor<T>& similarity,
                                   std::span<const std::size_t> labels, double epsilon) {
  const std::size_t b = similarity.rows();
  if (similarity.cols() != b) {
    throw ShapeError("similarity must be square, got " + to_string(similarity.dims()));
  }
  if (labels.size() != b) throw ContractError("label count does not match the similarity matrix");
  const T eps = static_cast<T>(epsilon);
  std::vector<MinedPairs> mined(b);
  for (std::size_t i = 0; i < b; ++i) {
    T min_pos = std::numeric_limits<T>::infinity();
    T max_neg = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) min_pos = std::min(min_pos, similarity(i, j));
      else max_neg = std::max(max_neg, similarity(i, j));
    }
    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      const T s = similarity(i, j);
      if (labels[j] == labels[i]) {
        if (s < max_neg + eps) mined[i].positives.push_back(j);
      } else if (s > min_pos - eps) {
        mined[i].negatives.push_back(j);
      }
    }
  }
  return mined;
}

template <typename T>
Var<T> ms_loss_from_similarity(const Var<T>& similarity, std::span<const std::size_t> labels,
                               const MsLossConfig& config) {
  config.validate();
  const auto& s = similarity.value();
  const std::size_t b = s.rows();
  check_labels(b, labels);
  const auto mined = mine_pairs(s, labels, config.epsilon);

  const T alpha = static_cast<T>(config.alpha);
  const T beta = static_cast<T>(config.beta);
  const T lambda = static_cast<T>(config.lambda);
  BasicTensor<T> dsim({b, b});
  T total{0};
  std::size_t active = 0;
  std::vector<T> x, w;
  for (std::size_t i = 0; i < b; ++i) {
    const auto& m = mined[i];
    if (m.positives.empty() && m.negatives.empty()) continue;
    ++active;
    if (!m.positives.empty()) {
      x.clear();
      for (auto p : m.positives) x.push_back(-alpha * (s(i, p) - lambda));
      total += soft_plus_sum(x, w) / alpha;
      for (std::size_t k = 0; k < m.positives.size(); ++k) dsim(i, m.positives[k]) -= w[k];
    }
    if (!m.negatives.empty()) {
      x.clear();
      for (auto n : m.negatives) x.push_back(beta * (s(i, n) - lambda));
      total += soft_plus_sum(x, w) / beta;
      for (std::size_t k = 0; k < m.negatives.size(); ++k) dsim(i, m.negatives[k]) += w[k];
    }
  }
  if (active == 0) {
    // Converged training hits this every step; warn on powers of two only.
    static std::atomic<std::uint64_t> empty_batches{0};
    const auto seen = ++empty_batches;
    if ((seen & (seen - 1)) == 0) {
      spdlog::warn("MS loss: no anchor has mined pairs; batch contributes 0 ({} such batches so far)", seen);
    }
    return make_op<T>(BasicTensor<T>({1}), {similarity}, [](Node<T>&) {});
  }
  const T inv = T{1} / static_cast<T>(active);
  for (auto& v : dsim.data()) v *= inv;
  BasicTensor<T> loss({1}, std::vector<T>{total * inv});
  return make_op<T>(std::move(loss), {similarity}, [dsim = std::move(dsim)](Node<T>& self) {
    BasicTensor<T> g = dsim;
    for (auto& v : g.data()) v *= self.grad[0];
    self.parents[0]->accumulate_grad(g);
  });
}

template <typename T>
Var<T> ms_loss(const Var<T>& descriptors, std::span<const std::size_t> labels,
               const MsLossConfig& config) {
  if (descriptors.value().rank() != 2) {
    throw ShapeError("MS loss expects a B x D descriptor matrix, got " +
                     to_string(descriptors.dims()));
  }
  check_labels(descriptors.value().rows(), labels);
  if (!descriptors.value().all_finite()) throw NumericError("MS loss got non-finite descriptors");
  const auto unit = l2_normalize_rows(descriptors);
  return ms_loss_from_similarity(matmul(unit, transpose(unit)), labels, config);
}

template <typename T>
MsLossResult<T> ms_loss(const BasicTensor<T>& descriptors, std::span<const std::size_t> labels,
                        const MsLossConfig& config) {
  const auto leaf = Var<T>::leaf(descriptors, true);
  const auto loss = ms_loss(leaf, labels, config);
  backward(loss);
  return {loss.value()[0], leaf.grad()};
}

#define MIXAGG_INSTANTIATE_MS(T)                                                               \
  template std::vector<MinedPairs> mine_pairs(const BasicTensor<T>&, std::span<const std::size_t>, \
                                              double);                                         \
  template Var<T> ms_loss_from_similarity(const Var<T>&, std::span<const std::size_t>,         \
                                          const MsLossConfig&);                                \
  template Var<T> ms_loss(const Var<T>&, std::span<const std::size_t>, const MsLossConfig&);   \
  template MsLossResult<T> ms_loss(const BasicTensor<T>&, std::span<const std::size_t>,        \
                                   const MsLossConfig&);

MIXAGG_INSTANTIATE_MS(float)
MIXAGG_INSTANTIATE_MS(double)

#undef MIXAGG_INSTANTIATE_MS

}  // namespace mixagg
