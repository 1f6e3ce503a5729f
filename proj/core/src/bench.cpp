#include "mixagg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "mixagg/errors.hpp"

namespace mixagg {

double percentile(std::vector<double> samples, double q) {
  if (samples.empty()) throw ContractError("percentile of no samples");
  if (!(q > 0.0 && q <= 100.0)) throw ParamError("percentile must be in (0, 100]");
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(samples.size())));
  return samples[std::max<std::size_t>(rank, 1) - 1];
}

LatencyStats summarize(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw ContractError("no latency samples");
  LatencyStats s;
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) /
              static_cast<double>(samples_ms.size());
  s.p50_ms = percentile(samples_ms, 50.0);
  s.p95_ms = percentile(samples_ms, 95.0);
  s.samples_ms = std::move(samples_ms);
  return s;
}

LatencyStats bench_latency(const MixVprParams& params, std::size_t n, std::size_t warmup,
                           std::uint64_t seed) {
  if (n == 0) throw ParamError("benchmark needs n >= 1");
  const auto& cfg = params.config();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(0.0f, 1.0f);
  Tensor input({cfg.channels, cfg.height, cfg.width});
  for (auto& v : input.data()) v = dist(rng);

  for (std::size_t i = 0; i < warmup; ++i) (void)aggregate(input, params);
  std::vector<double> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = aggregate(input, params);
    const auto t1 = std::chrono::steady_clock::now();
    if (out.empty()) throw NumericError("empty descriptor");
    samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return summarize(std::move(samples));
}

bool latency_consistent(const LatencyStats& a, const LatencyStats& b, double max_ratio) {
  if (a.mean_ms <= 0.0 || b.mean_ms <= 0.0) return false;
  const double hi = std::max(a.mean_ms, b.mean_ms), lo = std::min(a.mean_ms, b.mean_ms);
  return hi / lo <= max_ratio;
}

}  // namespace mixagg
