#pragma once

#include <span>
#include <vector>

#include "mixagg/autograd.hpp"

namespace mixagg {

/// Multi-Similarity loss hyperparameters: positive/negative temperatures,
/// similarity base, and the pair-mining margin.
struct MsLossConfig {
  double alpha = 1.0;
  double beta = 50.0;
  double lambda = 0.0;
  double epsilon = 0.1;

  /// Throws ParamError unless alpha > 0, beta > 0, epsilon >= 0.
  void validate() const;
};

struct MinedPairs {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

/// Hard-pair mining over a B x B similarity matrix. For anchor i a negative
/// n is kept when S_in > min_p S_ip - epsilon and a positive p is kept when
/// S_ip < max_n S_in + epsilon (p ranges over same-label j != i).
template <typename T>
std::vector<MinedPairs> mine_pairs(const BasicTensor<T>& similarity,
                                   std::span<const std::size_t> labels, double epsilon);

/// Loss over a similarity matrix. Each anchor with a nonempty mined set
/// contributes
///   1/alpha log(1 + sum_p exp(-alpha (S_ip - lambda)))
/// + 1/beta  log(1 + sum_n exp( beta (S_in - lambda)));
/// the result is the mean over those anchors, or 0 (with a warning) when
/// none qualifies. Mining is treated as constant for differentiation.
template <typename T>
Var<T> ms_loss_from_similarity(const Var<T>& similarity, std::span<const std::size_t> labels,
                               const MsLossConfig& config);

/// Re-normalizes the B x D descriptor rows, forms S = D D^T and applies
/// ms_loss_from_similarity. Throws ContractError if fewer than two labels
/// are present or the label count differs from B.
template <typename T>
Var<T> ms_loss(const Var<T>& descriptors, std::span<const std::size_t> labels,
               const MsLossConfig& config);

template <typename T>
struct MsLossResult {
  T loss{};
  BasicTensor<T> grad;  // d loss / d descriptors
};

/// Standalone evaluation with gradients w.r.t. the descriptor matrix.
template <typename T>
MsLossResult<T> ms_loss(const BasicTensor<T>& descriptors, std::span<const std::size_t> labels,
                        const MsLossConfig& config);

}  // namespace mixagg
