#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mixagg/autograd.hpp"

namespace mixagg {

struct FiniteDiffOptions {
  double step = 1e-5;
  /// Number of coordinates to probe; 0 probes every coordinate.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  /// Denominator floor of the relative error, so gradients that are zero
  /// on both sides compare as equal.
  double abs_floor = 1e-6;
};

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Scalar objective evaluated on plain parameter tensors.
using ScalarFn = std::function<double(const std::vector<Tensor64>&)>;
/// Scalar objective built as a 64-bit graph over parameter variables.
using GraphFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

/// Central-difference check of `analytic` against f. Throws NumericError
/// naming the parameter coordinate if f turns non-finite.
FiniteDiffReport finite_diff_check(const ScalarFn& f, std::vector<Tensor64> params,
                                   const std::vector<Tensor64>& analytic,
                                   const FiniteDiffOptions& options = {});

/// Runs the graph once with gradients to obtain the analytic side, then
/// probes it with constant leaves.
FiniteDiffReport finite_diff_check(const GraphFn& f, std::vector<Tensor64> params,
                                   const FiniteDiffOptions& options = {});

}  // namespace mixagg
