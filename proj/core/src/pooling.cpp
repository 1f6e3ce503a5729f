#include "mixagg/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixagg/errors.hpp"
#include "mixagg/model.hpp"

namespace mixagg {

template <typename T>
BasicTensor<T> avg_pool(const BasicTensor<T>& maps) {
  const auto x = Var<T>::constant(flatten_maps(maps));
  const auto pooled = l2_normalize_rows(row_mean(x));
  return pooled.value().reshaped({x.value().rows()});
}

template <typename T>
Var<T> gem(const Var<T>& x, const Var<T>& p) {
  if (x.value().rank() != 2) throw ShapeError("gem expects a c x n matrix, got " + to_string(x.dims()));
  if (p.value().size() != 1) throw ShapeError("gem exponent must be a single value");
  const T power = p.value()[0];
  if (!(power >= T{1})) throw ParamError("GeM exponent p must be >= 1");

  const std::size_t c = x.value().rows(), n = x.value().cols();
  const T floor = static_cast<T>(kGemClampFloor);
  BasicTensor<T> out({1, c});
  // Per row: softmax weights of p*log(x) give d(mean x^p)/dx in a form that
  // does not overflow for large p.
  BasicTensor<T> weights({c, n});
  std::vector<T> mean_log(c);
  std::vector<T> log_mean_pow(c);
  for (std::size_t i = 0; i < c; ++i) {
    const auto row = x.value().row(i);
    auto w = weights.row(i);
    T amax = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) amax = std::max(amax, power * std::log(std::max(row[j], floor)));
    T s{0};
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = std::exp(power * std::log(std::max(row[j], floor)) - amax);
      s += w[j];
    }
    T wl{0};
    for (std::size_t j = 0; j < n; ++j) {
      w[j] /= s;
      wl += w[j] * std::log(std::max(row[j], floor));
    }
    mean_log[i] = wl;
    log_mean_pow[i] = amax + std::log(s) - std::log(static_cast<T>(n));
    out[i] = std::exp(log_mean_pow[i] / power);
  }
  BasicTensor<T> y = out;
  return make_op<T>(
      std::move(out), {x, p},
      [y = std::move(y), weights = std::move(weights), mean_log = std::move(mean_log),
       log_mean_pow = std::move(log_mean_pow), power, floor, c, n](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pp = *self.parents[1];
        if (px.requires_grad) {
          BasicTensor<T> dx({c, n});
          for (std::size_t i = 0; i < c; ++i) {
            const auto row = px.value.row(i);
            const auto w = weights.row(i);
            auto o = dx.row(i);
            for (std::size_t j = 0; j < n; ++j) {
              if (row[j] > floor) o[j] = self.grad[i] * y[i] * w[j] / row[j];
            }
          }
          px.accumulate_grad(dx);
        }
        if (pp.requires_grad) {
          T dp{0};
          for (std::size_t i = 0; i < c; ++i) {
            dp += self.grad[i] * y[i] *
                  (mean_log[i] / power - log_mean_pow[i] / (power * power));
          }
          pp.accumulate_grad(BasicTensor<T>(pp.value.dims(), std::vector<T>{dp}));
        }
      });
}

template <typename T>
BasicTensor<T> gem_pool(const BasicTensor<T>& maps, T p) {
  const auto x = Var<T>::constant(flatten_maps(maps));
  const auto pv = Var<T>::constant(BasicTensor<T>({1}, std::vector<T>{p}));
  const auto pooled = l2_normalize_rows(gem(x, pv));
  return pooled.value().reshaped({x.value().rows()});
}

template BasicTensor<float> avg_pool(const BasicTensor<float>&);
template BasicTensor<double> avg_pool(const BasicTensor<double>&);
template Var<float> gem(const Var<float>&, const Var<float>&);
template Var<double> gem(const Var<double>&, const Var<double>&);
template BasicTensor<float> gem_pool(const BasicTensor<float>&, float);
template BasicTensor<double> gem_pool(const BasicTensor<double>&, double);

}  // namespace mixagg
