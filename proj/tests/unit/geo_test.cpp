#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mixagg/errors.hpp"
#include "mixagg/geo.hpp"

namespace mixagg {
namespace {

TEST(Haversine, SamePointIsZero) { EXPECT_EQ(haversine_m({48.8566, 2.3522}, {48.8566, 2.3522}), 0.0); }

TEST(Haversine, MeridianArcMatchesLatitudeOracle) {
  // Along a meridian the distance is R * dlat in radians.
  const double oracle = 0.0004 * std::numbers::pi / 180.0 * 6371000.0;
  ASSERT_NEAR(oracle, 44.5, 0.5);
  EXPECT_NEAR(haversine_m({48.8566, 2.3522}, {48.8570, 2.3522}), oracle, 1e-6);
}

TEST(Haversine, SymmetricNonNegativeTriangle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  for (int i = 0; i < 500; ++i) {
    const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)}, c{lat(rng), lon(rng)};
    const double ab = haversine_m(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, haversine_m(b, a), 1e-6);
    EXPECT_LE(ab, haversine_m(a, c) + haversine_m(c, b) + 1e-6);
  }
}

TEST(Haversine, AntipodesAreHalfCircumference) {
  EXPECT_NEAR(haversine_m({0, 0}, {0, 180}), std::numbers::pi * 6371000.0, 1e-6);
}

TEST(Haversine, RejectsOutOfRange) {
  EXPECT_THROW(haversine_m({91, 0}, {0, 0}), DataError);
  EXPECT_THROW(haversine_m({0, 0}, {0, -181}), DataError);
  EXPECT_FALSE(is_valid({std::nan(""), 0}));
}

TEST(Offset, DisplacementRoundTripsThroughHaversine) {
  const GeoPoint origin{47.3769, 8.5417};
  EXPECT_NEAR(haversine_m(origin, offset_m(origin, 100.0, 0.0)), 100.0, 0.01);
  EXPECT_NEAR(haversine_m(origin, offset_m(origin, 0.0, 150.0)), 150.0, 0.05);
}

}  // namespace
}  // namespace mixagg
