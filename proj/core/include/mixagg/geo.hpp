#pragma once

namespace mixagg {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;
/// Throws DataError if latitude is outside [-90, 90] or longitude outside
/// [-180, 180].
void require_valid(const GeoPoint& p);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Point displaced by (north, east) meters, using the local flat-earth
/// approximation. Used to lay out synthetic places.
GeoPoint offset_m(const GeoPoint& origin, double north_m, double east_m);

}  // namespace mixagg
