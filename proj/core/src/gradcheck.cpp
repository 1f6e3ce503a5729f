#include "mixagg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mixagg/errors.hpp"

namespace mixagg {

FiniteDiffReport finite_diff_check(const ScalarFn& f, std::vector<Tensor64> params,
                                   const std::vector<Tensor64>& analytic,
                                   const FiniteDiffOptions& options) {
  if (!(options.step > 0.0)) throw ParamError("finite-difference step must be positive");
  if (analytic.size() != params.size()) {
    throw ShapeError("finite_diff_check: " + std::to_string(params.size()) + " params but " +
                     std::to_string(analytic.size()) + " gradients");
  }
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (analytic[p].dims() != params[p].dims()) {
      throw ShapeError("finite_diff_check: gradient " + std::to_string(p) + " has dims " +
                       to_string(analytic[p].dims()) + ", param has " +
                       to_string(params[p].dims()));
    }
    for (std::size_t i = 0; i < params[p].size(); ++i) coords.emplace_back(p, i);
  }
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    picked.reserve(options.max_coords);
    std::mt19937_64 rng(options.seed);
    std::sample(coords.begin(), coords.end(), std::back_inserter(picked), options.max_coords, rng);
    coords = std::move(picked);
  }

  FiniteDiffReport report;
  for (const auto& [p, i] : coords) {
    const double original = params[p][i];
    params[p][i] = original + options.step;
    const double up = f(params);
    params[p][i] = original - options.step;
    const double down = f(params);
    params[p][i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("objective is non-finite when probing parameter " + std::to_string(p) +
                         " coordinate " + std::to_string(i));
    }
    const double numeric = (up - down) / (2.0 * options.step);
    const double exact = analytic[p][i];
    const double denom = std::max({std::abs(exact), std::abs(numeric), options.abs_floor});
    const double rel = std::abs(exact - numeric) / denom;
    ++report.coords_checked;
    if (rel > report.max_rel_error || report.coords_checked == 1) {
      report.max_rel_error = rel;
      report.worst_param = p;
      report.worst_index = i;
      report.worst_analytic = exact;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

FiniteDiffReport finite_diff_check(const GraphFn& f, std::vector<Tensor64> params,
                                   const FiniteDiffOptions& options) {
  std::vector<Var<double>> leaves;
  leaves.reserve(params.size());
  for (const auto& p : params) leaves.push_back(Var<double>::leaf(p, true));
  const auto root = f(leaves);
  if (!root.value().all_finite()) throw NumericError("objective is non-finite at the base point");
  backward(root);
  std::vector<Tensor64> analytic;
  analytic.reserve(leaves.size());
  for (const auto& l : leaves) analytic.push_back(l.grad());

  const ScalarFn eval = [&f](const std::vector<Tensor64>& ps) {
    std::vector<Var<double>> consts;
    consts.reserve(ps.size());
    for (const auto& p : ps) consts.push_back(Var<double>::constant(p));
    return f(consts).value()[0];
  };
  return finite_diff_check(eval, std::move(params), analytic, options);
}

}  // namespace mixagg
