#include "mixagg/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mixagg/errors.hpp"

namespace mixagg {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

void require_valid(const GeoPoint& p) {
  if (!is_valid(p)) {
    throw DataError("coordinates out of range: lat=" + std::to_string(p.lat) +
                    " lon=" + std::to_string(p.lon));
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  require_valid(a);
  require_valid(b);
  const double dlat = (b.lat - a.lat) * kDegToRad;
  const double dlon = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  const double h = s1 * s1 + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint offset_m(const GeoPoint& origin, double north_m, double east_m) {
  const double dlat = north_m / kEarthRadiusM / kDegToRad;
  const double dlon = east_m / (kEarthRadiusM * std::cos(origin.lat * kDegToRad)) / kDegToRad;
  return {origin.lat + dlat, origin.lon + dlon};
}

}  // namespace mixagg
