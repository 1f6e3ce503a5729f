#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mixagg/geo.hpp"

namespace mixagg {

struct PlaceRecord {
  std::string id;
  std::string place;
  GeoPoint position;
  std::filesystem::path tensor;  // relative to the manifest directory
  std::size_t line = 0;          // 1-based source line, 0 if built in memory
};

/// Validated record list. Image ids are unique, coordinates are in range,
/// and places are indexed in order of first appearance.
class Manifest {
 public:
  Manifest() = default;
  /// Throws DataError on duplicate ids, empty ids or places, or bad
  /// coordinates (citing the source line when known).
  explicit Manifest(std::vector<PlaceRecord> records, std::filesystem::path base_dir = {});

  const std::vector<PlaceRecord>& records() const noexcept { return records_; }
  const PlaceRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::filesystem::path tensor_path(std::size_t i) const;

  const std::vector<std::string>& places() const noexcept { return places_; }
  /// Record indices of each place, in manifest order.
  const std::vector<std::vector<std::size_t>>& place_members() const noexcept { return members_; }
  /// Place index of record i.
  std::size_t label(std::size_t i) const { return labels_[i]; }

  Manifest subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<PlaceRecord> records_;
  std::filesystem::path base_dir_;
  std::vector<std::string> places_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<std::size_t> labels_;
};

/// JSON-lines, one {"id", "place", "lat", "lon", "tensor"} object per line.
/// Blank lines are skipped; an empty file yields an empty manifest and a
/// warning. Malformed lines raise ParseError with the line number.
Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace mixagg
