#pragma once

#include <cstdint>
#include <vector>

#include "mixagg/model.hpp"

namespace mixagg {

struct LatencyStats {
  std::vector<double> samples_ms;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

/// Nearest-rank percentile (q in (0, 100]) of unsorted samples.
double percentile(std::vector<double> samples, double q);

LatencyStats summarize(std::vector<double> samples_ms);

/// Wall-clock time of single-sample aggregate() calls on random inputs.
/// `warmup` untimed calls precede `n` timed ones.
LatencyStats bench_latency(const MixVprParams& params, std::size_t n, std::size_t warmup = 3,
                           std::uint64_t seed = 0);

/// True when the two means are within a factor `max_ratio` of each other.
bool latency_consistent(const LatencyStats& a, const LatencyStats& b, double max_ratio = 3.0);

}  // namespace mixagg
