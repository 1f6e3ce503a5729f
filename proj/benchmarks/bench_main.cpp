#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "mixagg/model.hpp"
#include "mixagg/ms_loss.hpp"
#include "mixagg/retrieval.hpp"

namespace {

using namespace mixagg;

Tensor random_tensor(Shape dims, std::uint64_t seed) {
  Tensor t(std::move(dims));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Single-descriptor inference at the default 1024 x 20 x 20 input; the
// argument is the mixer depth.
void BM_Aggregate(benchmark::State& state) {
  MixVprConfig cfg;
  cfg.mixer_depth = static_cast<std::size_t>(state.range(0));
  const auto params = MixVprParams::initialized(cfg, 1);
  const auto maps = random_tensor({cfg.channels, cfg.height, cfg.width}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(maps, params));
}
BENCHMARK(BM_Aggregate)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, n}, 3), b = random_tensor({n, n}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

// Brute-force search over a database of unit rows; arguments are the
// database size and k.
void BM_Topk(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const std::size_t dim = 256;
  auto m = random_tensor({n, dim}, 5);
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    for (const float v : m.row(i)) ss += static_cast<double>(v) * v;
    for (auto& v : m.row(i)) v = static_cast<float>(v / std::sqrt(ss));
  }
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  const DescriptorDb db(std::move(ids), m);
  const auto query = db.row(n / 2);
  for (auto _ : state) benchmark::DoNotOptimize(topk(db, query, k));
}
BENCHMARK(BM_Topk)->Args({1000, 10})->Args({10000, 10})->Args({10000, 100})->Unit(benchmark::kMicrosecond);

void BM_MsLoss(benchmark::State& state) {
  const auto places = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 4, dim = 512;
  const auto desc = random_tensor({places * k, dim}, 6);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < places * k; ++i) labels.push_back(i / k);
  for (auto _ : state) benchmark::DoNotOptimize(ms_loss(desc, labels, MsLossConfig{}));
}
BENCHMARK(BM_MsLoss)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
