#include <gtest/gtest.h>

#include "mixagg/errors.hpp"
#include "mixagg/train_config.hpp"

namespace mixagg {
namespace {

TEST(TrainConfig, DefaultsFollowTheRecipe) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.batch.places, 8u);
  EXPECT_EQ(cfg.batch.images_per_place, 4u);
  EXPECT_DOUBLE_EQ(cfg.optim.base_lr, 0.05);
  EXPECT_DOUBLE_EQ(cfg.optim.momentum, 0.9);
  EXPECT_DOUBLE_EQ(cfg.optim.weight_decay, 0.001);
  EXPECT_EQ(cfg.epochs, 30u);
  EXPECT_DOUBLE_EQ(cfg.loss.beta, 50.0);
  EXPECT_EQ(cfg.model.mixer_depth, 4u);
}

TEST(TrainConfig, ParseEveryKeyAndRoundTrip) {
  const auto cfg = TrainConfig::parse(
      "# comment\n"
      "seed=9\nP=3\nK=2\nlr=0.1\nmomentum=0.5\nwd=0.01\nepochs=7\n"
      "alpha=2\nbeta=40\nlambda=0.5\nepsilon=0.2\n"
      "L=2\nc=8\nh=3\nw=5\nd=6\nr=2\nmlp_ratio=2\n"
      "steps_per_epoch=4\nlr_decay_every=3\nlr_divisor=2\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.batch.places, 3u);
  EXPECT_DOUBLE_EQ(cfg.optim.base_lr, 0.1);
  EXPECT_DOUBLE_EQ(cfg.loss.lambda, 0.5);
  EXPECT_EQ(cfg.model.width, 5u);
  EXPECT_DOUBLE_EQ(cfg.model.mlp_ratio, 2.0);
  EXPECT_EQ(cfg.steps_per_epoch, 4u);
  const auto back = TrainConfig::parse(cfg.to_text());
  EXPECT_EQ(back.to_text(), cfg.to_text());
}

TEST(TrainConfig, UnknownAndRepeatedKeysCiteLine) {
  try {
    TrainConfig::parse("seed=1\nfoo=2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  try {
    TrainConfig::parse("seed=1\n\nseed=2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(TrainConfig::parse("P=abc\n"), ParseError);
  EXPECT_THROW(TrainConfig::parse("just text\n"), ParseError);
}

TEST(TrainConfig, ValidationNeedsPositivesAndNegatives) {
  EXPECT_THROW(TrainConfig::parse("P=1\n"), ParamError);
  EXPECT_THROW(TrainConfig::parse("K=1\n"), ParamError);
}

}  // namespace
}  // namespace mixagg
