#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mixagg/errors.hpp"
#include "mixagg/model.hpp"
#include "test_util.hpp"

namespace mixagg {
namespace {

using testing::random_tensor;

MixVprConfig small_config(std::size_t c = 6, std::size_t h = 3, std::size_t w = 4, std::size_t L = 2) {
  MixVprConfig cfg;
  cfg.channels = c;
  cfg.height = h;
  cfg.width = w;
  cfg.mixer_depth = L;
  cfg.out_channels = 5;
  cfg.out_rows = 3;
  return cfg;
}

double norm(std::span<const float> v) {
  double ss = 0.0;
  for (float x : v) ss += static_cast<double>(x) * x;
  return std::sqrt(ss);
}

// Independent tally over the stored tensors of one block.
std::size_t enumerate_block(const MixVprParams& p, std::size_t l) {
  std::size_t total = 0;
  for (std::size_t s = 0; s < kBlockSlots; ++s) total += p.block(l, static_cast<BlockSlot>(s)).size();
  return total;
}

TEST(ParamCount, PerBlockAtPaperSpatialSize) {
  MixVprConfig cfg;  // n = 400, ratio 1
  // norm 2n + fc1 (n*n + n) + fc2 (n*n + n) with n = 400.
  const std::size_t expected = 2 * 400 + (400 * 400 + 400) + (400 * 400 + 400);
  ASSERT_EQ(expected, 321600u);
  EXPECT_EQ(count_block_params(cfg), expected);

  cfg.channels = 8;  // keep the enumeration cheap; c only affects the head
  cfg.out_channels = 8;
  const auto params = MixVprParams(cfg);
  for (std::size_t l = 0; l < cfg.mixer_depth; ++l) EXPECT_EQ(enumerate_block(params, l), expected);
}

TEST(ParamCount, HeadOnlyAtZeroDepth) {
  auto cfg = small_config(6, 3, 4, 0);
  EXPECT_EQ(count_params(cfg), 5u * 6 + 5 + 3u * 12 + 3);
  EXPECT_EQ(MixVprParams(cfg).numel(), count_params(cfg));
}

TEST(ParamCount, FourBlocksOverBaseline) {
  MixVprConfig with, without;
  without.mixer_depth = 0;
  EXPECT_EQ(count_params(with) - count_params(without), 1286400u);
}

TEST(ParamCount, ClosedFormMatchesEnumerationOnRandomConfigs) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    MixVprConfig cfg;
    cfg.channels = 1 + rng() % 6;
    cfg.height = 1 + rng() % 5;
    cfg.width = 1 + rng() % 5;
    cfg.mixer_depth = rng() % 4;
    cfg.mlp_ratio = 0.5 + static_cast<double>(rng() % 4) * 0.5;
    cfg.out_channels = 1 + rng() % 5;
    cfg.out_rows = 1 + rng() % 4;
    EXPECT_EQ(MixVprParams(cfg).numel(), count_params(cfg));
  }
}

TEST(Config, TextRoundTripAndValidation) {
  auto cfg = small_config();
  cfg.mlp_ratio = 0.75;
  EXPECT_EQ(MixVprConfig::from_text(cfg.to_text()), cfg);
  cfg.out_rows = 0;
  EXPECT_THROW(cfg.validate(), ParamError);
  EXPECT_THROW(MixVprConfig::from_text("c=4\nq=1\n"), ParseError);
}

TEST(Init, SeededAndWithinFanInBounds) {
  const auto cfg = small_config();
  const auto a = MixVprParams::initialized(cfg, 3);
  EXPECT_EQ(a, MixVprParams::initialized(cfg, 3));
  EXPECT_FALSE(a == MixVprParams::initialized(cfg, 4));
  const double n = static_cast<double>(cfg.spatial());
  for (float v : a.block(0, BlockSlot::NormGamma).data()) EXPECT_EQ(v, 1.0f);
  for (float v : a.block(0, BlockSlot::NormBeta).data()) EXPECT_EQ(v, 0.0f);
  for (float v : a.block(1, BlockSlot::Fc1Weight).data()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(n));
  for (float v : a.head(HeadSlot::DepthWeight).data()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(6.0));
}

TEST(Params, AssignNamesOffendingTensor) {
  auto p = MixVprParams(small_config());
  try {
    p.assign("blocks.1.fc2.weight", Tensor({2, 2}));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("blocks.1.fc2.weight"), std::string::npos);
  }
  EXPECT_THROW(p.assign("nope", Tensor({1})), DataError);
}

TEST(Flatten, RowMajorAndReversible) {
  const auto maps = Tensor({1, 2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(flatten_maps(maps), Tensor({1, 4}, {1, 2, 3, 4}));
  const auto big = random_tensor<float>({1024, 20, 20}, 1);
  const auto flat = flatten_maps(big);
  EXPECT_EQ(flat.dims(), (Shape{1024, 400}));
  EXPECT_EQ(flat.reshaped({1024, 20, 20}), big);
  EXPECT_THROW(flatten_maps(Tensor({2})), ShapeError);
}

TEST(MixerBlock, ZeroMlpIsIdentity) {
  const auto cfg = small_config(8, 4, 4, 1);
  auto p = MixVprParams::initialized(cfg, 1);
  for (auto slot : {BlockSlot::Fc1Weight, BlockSlot::Fc1Bias, BlockSlot::Fc2Weight, BlockSlot::Fc2Bias}) {
    auto& t = p.block(0, slot);
    t = Tensor(t.dims());
  }
  const auto bound = bind(p, false);
  const auto x = Var<float>::constant(random_tensor<float>({8, 16}, 2));
  EXPECT_EQ(feature_mixer_block(x, bound.blocks()[0]).value(), x.value());
}

TEST(MixerBlock, MatchesStraightLineOracle) {
  // One row, n = 2, hidden 2, hand-set weights; oracle written out longhand.
  MixVprConfig cfg = small_config(1, 1, 2, 1);
  MixVprParams64 p(cfg);
  p.assign("blocks.0.norm.gamma", Tensor64::vector({1.5, 0.5}));
  p.assign("blocks.0.norm.beta", Tensor64::vector({0.1, -0.2}));
  p.assign("blocks.0.fc1.weight", Tensor64::matrix({{0.3, -0.7}, {1.1, 0.4}}));
  p.assign("blocks.0.fc1.bias", Tensor64::vector({0.05, -0.3}));
  p.assign("blocks.0.fc2.weight", Tensor64::matrix({{-0.6, 0.9}, {0.2, 0.8}}));
  p.assign("blocks.0.fc2.bias", Tensor64::vector({0.01, 0.02}));
  const double x0 = 2.0, x1 = -1.0;

  const double mean = (x0 + x1) / 2.0;
  const double var = ((x0 - mean) * (x0 - mean) + (x1 - mean) * (x1 - mean)) / 2.0;
  const double s = std::sqrt(var + 1e-5);
  const double n0 = 1.5 * (x0 - mean) / s + 0.1;
  const double n1 = 0.5 * (x1 - mean) / s - 0.2;
  const double h0 = std::max(0.0, 0.3 * n0 - 0.7 * n1 + 0.05);
  const double h1 = std::max(0.0, 1.1 * n0 + 0.4 * n1 - 0.3);
  const double y0 = x0 + (-0.6 * h0 + 0.9 * h1 + 0.01);
  const double y1 = x1 + (0.2 * h0 + 0.8 * h1 + 0.02);

  const auto bound = bind(p, false);
  const auto out = feature_mixer_block(Var<double>::constant(Tensor64::matrix({{x0, x1}})), bound.blocks()[0]);
  EXPECT_NEAR(out.value()[0], y0, 1e-12);
  EXPECT_NEAR(out.value()[1], y1, 1e-12);
}

TEST(MixerStack, IsotropicForAnyDepth) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const auto cfg = small_config(1 + rng() % 8, 1 + rng() % 4, 1 + rng() % 4, rng() % 4);
    const auto p = MixVprParams::initialized(cfg, rng());
    const auto bound = bind(p, false);
    const auto x = Var<float>::constant(random_tensor<float>({cfg.channels, cfg.spatial()}, rng()));
    const auto blocks = bound.blocks();
    const auto z = mixer_stack<float>(x, blocks);
    EXPECT_EQ(z.dims(), x.dims());
    if (cfg.mixer_depth == 0) EXPECT_EQ(z.value(), x.value());
  }
}

TEST(MixerStack, ChannelPermutationEquivariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 2 + rng() % 7;  // c <= 8
    const auto cfg = small_config(c, 3, 3, 1 + rng() % 3);
    const auto p = MixVprParams::initialized(cfg, rng());
    const auto bound = bind(p, false);
    const auto blocks = bound.blocks();
    const auto x = random_tensor<float>({c, 9}, rng());
    std::vector<std::size_t> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor px({c, 9});
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < 9; ++j) px(i, j) = x(perm[i], j);

    const auto z = mixer_stack<float>(Var<float>::constant(x), blocks).value();
    const auto pz = mixer_stack<float>(Var<float>::constant(px), blocks).value();
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < 9; ++j) EXPECT_EQ(pz(i, j), z(perm[i], j));
  }
}

TEST(ProjectionHead, IdentityWeightsReturnInput) {
  MixVprConfig cfg = small_config(4, 2, 3, 0);
  cfg.out_channels = 4;
  cfg.out_rows = 6;
  MixVprParams p(cfg);
  p.head(HeadSlot::DepthWeight) = Tensor::identity(4);
  p.head(HeadSlot::RowWeight) = Tensor::identity(6);
  const auto z = random_tensor<float>({4, 6}, 3);
  const auto out = projection_head(Var<float>::constant(z), bind(p, false).head());
  EXPECT_EQ(out.value(), z);
}

TEST(ProjectionHead, MismatchNamesTheAxis) {
  const auto p = MixVprParams::initialized(small_config(4, 2, 3, 0), 1);
  const auto head = bind(p, false).head();
  try {
    projection_head(Var<float>::constant(Tensor({5, 6})), head);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos);
  }
  try {
    projection_head(Var<float>::constant(Tensor({4, 7})), head);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("spatial"), std::string::npos);
  }
}

TEST(Aggregate, HeadOnlyMatchesLonghandOracle) {
  const auto cfg = small_config(3, 2, 2, 0);
  const auto p = MixVprParams64::initialized(cfg, 4);
  const auto maps = random_tensor<double>({3, 2, 2}, 5);
  const auto& wd = p.head(HeadSlot::DepthWeight);
  const auto& bd = p.head(HeadSlot::DepthBias);
  const auto& wr = p.head(HeadSlot::RowWeight);
  const auto& br = p.head(HeadSlot::RowBias);
  // y[i][n] = sum_c wd[i][c] x[c][n] + bd[i];  o[i][k] = sum_n y[i][n] wr[k][n] + br[k]
  std::vector<double> o;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      double acc = br[k];
      for (std::size_t n = 0; n < 4; ++n) {
        double y = bd[i];
        for (std::size_t c = 0; c < 3; ++c) y += wd(i, c) * maps[c * 4 + n];
        acc += y * wr(k, n);
      }
      o.push_back(acc);
    }
  }
  double ss = 0.0;
  for (double v : o) ss += v * v;
  const auto got = aggregate(maps, p);
  ASSERT_EQ(got.size(), o.size());
  for (std::size_t i = 0; i < o.size(); ++i) EXPECT_NEAR(got[i], o[i] / std::sqrt(ss), 1e-12);
}

TEST(Aggregate, ZeroMlpEqualsHeadOnlyPipeline) {
  auto cfg = small_config(5, 3, 3, 3);
  auto deep = MixVprParams::initialized(cfg, 6);
  for (std::size_t l = 0; l < 3; ++l) {
    for (auto slot : {BlockSlot::Fc1Weight, BlockSlot::Fc1Bias, BlockSlot::Fc2Weight, BlockSlot::Fc2Bias}) {
      auto& t = deep.block(l, slot);
      t = Tensor(t.dims());
    }
  }
  cfg.mixer_depth = 0;
  MixVprParams shallow(cfg);
  for (auto slot : {HeadSlot::DepthWeight, HeadSlot::DepthBias, HeadSlot::RowWeight, HeadSlot::RowBias}) {
    shallow.head(slot) = deep.head(slot);
  }
  const auto maps = random_tensor<float>({5, 3, 3}, 7);
  EXPECT_EQ(aggregate(maps, deep), aggregate(maps, shallow));
}

TEST(Aggregate, UnitNormOnRandomInputs) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    const auto cfg = small_config(1 + rng() % 6, 1 + rng() % 4, 1 + rng() % 4, rng() % 3);
    const auto p = MixVprParams::initialized(cfg, rng());
    const double scale = std::pow(10.0, static_cast<double>(rng() % 7) - 3.0);
    const auto maps = random_tensor<float>({cfg.channels, cfg.height, cfg.width}, rng(), -scale, scale);
    const auto d = aggregate(maps, p);
    EXPECT_EQ(d.size(), cfg.descriptor_dim());
    EXPECT_NEAR(norm(d.data()), 1.0, 1e-6);
  }
}

TEST(Aggregate, DeterministicAndBatchConsistent) {
  const auto cfg = small_config(4, 3, 3, 2);
  const auto p = MixVprParams::initialized(cfg, 9);
  const auto a = random_tensor<float>({4, 3, 3}, 10);
  const auto b = random_tensor<float>({4, 3, 3}, 11);
  EXPECT_EQ(aggregate(a, p), aggregate(a, p));
  const Tensor* inputs[] = {&a, &b};
  const auto batch = aggregate_batch<float>(bind(p, false), inputs).value();
  const auto da = aggregate(a, p), db = aggregate(b, p);
  for (std::size_t j = 0; j < cfg.descriptor_dim(); ++j) {
    EXPECT_NEAR(batch(0, j), da[j], 1e-6);
    EXPECT_NEAR(batch(1, j), db[j], 1e-6);
  }
}

TEST(Aggregate, RejectsWrongInputDims) {
  const auto p = MixVprParams::initialized(small_config(4, 3, 3, 1), 1);
  EXPECT_THROW(aggregate(Tensor({5, 3, 3}), p), ShapeError);
  EXPECT_THROW(aggregate(Tensor({4, 3, 2}), p), ShapeError);
}

TEST(Aggregate, DefaultDescriptorDims) {
  // Paper-scale shapes: c = 1024, 20 x 20 maps, four blocks.
  MixVprConfig cfg;
  const auto maps = random_tensor<float>({1024, 20, 20}, 12, 0.0, 1.0);
  for (std::size_t r : {2u, 4u}) {
    cfg.out_rows = r;
    const auto p = MixVprParams::initialized(cfg, 1);
    const auto d = aggregate(maps, p);
    EXPECT_EQ(d.size(), 1024u * r);
    EXPECT_NEAR(norm(d.data()), 1.0, 1e-6);
  }
}

}  // namespace
}  // namespace mixagg
