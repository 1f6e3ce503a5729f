#include <gtest/gtest.h>

#include <cmath>

#include "mixagg/errors.hpp"
#include "mixagg/gradcheck.hpp"
#include "mixagg/pooling.hpp"
#include "test_util.hpp"

namespace mixagg {
namespace {

using testing::random_tensor;

TEST(AvgPool, HandMeans) {
  // Channel means 2 and 2, normalized.
  const auto d = avg_pool(Tensor({2, 1, 2}, {1, 3, 2, 2}));
  EXPECT_NEAR(d[0], 1.0 / std::sqrt(2.0), 1e-7);
  EXPECT_NEAR(d[1], 1.0 / std::sqrt(2.0), 1e-7);
}

TEST(AvgPool, ConstantMaps) {
  const auto d = avg_pool(Tensor({3, 2, 2}, {1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2}));
  EXPECT_NEAR(d[0], 1.0 / 3.0, 1e-7);
  EXPECT_NEAR(d[1], 2.0 / 3.0, 1e-7);
}

TEST(Gem, PowerOneEqualsAveragePooling) {
  const auto maps = random_tensor<double>({4, 3, 3}, 1, 0.0, 2.0);
  const auto a = avg_pool(maps);
  const auto g = gem_pool(maps, 1.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(g[i], a[i], 1e-12);
}

TEST(Gem, LargePowerApproachesMax) {
  const auto maps = random_tensor<double>({5, 4, 4}, 2, 0.0, 3.0);
  const auto x = Var<double>::constant(maps.reshaped({5, 16}));
  const auto y = gem(x, Var<double>::constant(Tensor64::vector({100.0})));
  for (std::size_t c = 0; c < 5; ++c) {
    double mx = 0.0;
    for (double v : maps.reshaped({5, 16}).row(c)) mx = std::max(mx, v);
    EXPECT_LE(y.value()[c], mx * (1 + 1e-12));
    EXPECT_GE(y.value()[c], 0.95 * mx);
  }
}

TEST(Gem, RejectsPowerBelowOne) {
  EXPECT_THROW(gem_pool(Tensor({1, 2, 2}, {1, 2, 3, 4}), 0.5f), ParamError);
}

TEST(Gem, GradientsInInputAndPower) {
  const GraphFn f = [](const std::vector<Var<double>>& p) {
    return sum(mul(gem(p[0], p[1]), Var<double>::constant(Tensor64::matrix({{0.3, -1.2, 0.8}}))));
  };
  const auto report = finite_diff_check(
      f, {random_tensor<double>({3, 6}, 3, 0.2, 2.0), Tensor64::vector({3.0})});
  EXPECT_LT(report.max_rel_error, 1e-4);
}

TEST(Gem, ClampsNonPositiveActivations) {
  const auto d = gem(Var<double>::constant(Tensor64::matrix({{-1.0, 0.0}})),
                     Var<double>::constant(Tensor64::vector({2.0})));
  EXPECT_NEAR(d.value()[0], 1e-6, 1e-12);
}

}  // namespace
}  // namespace mixagg
