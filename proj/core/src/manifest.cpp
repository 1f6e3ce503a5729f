#include "mixagg/manifest.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "mixagg/errors.hpp"

namespace mixagg {
namespace {

std::string where(const PlaceRecord& r) {
  return r.line ? " (line " + std::to_string(r.line) + ")" : std::string{};
}

}  // namespace

Manifest::Manifest(std::vector<PlaceRecord> records, std::filesystem::path base_dir)
    : records_(std::move(records)), base_dir_(std::move(base_dir)) {
  std::unordered_set<std::string> ids;
  std::unordered_map<std::string, std::size_t> place_index;
  labels_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.id.empty()) throw DataError("record with empty id" + where(r));
    if (r.place.empty()) throw DataError("record '" + r.id + "' has an empty place" + where(r));
    if (!is_valid(r.position)) {
      throw DataError("record '" + r.id + "' coordinates out of range: lat=" +
                      std::to_string(r.position.lat) + " lon=" + std::to_string(r.position.lon) +
                      where(r));
    }
    if (!ids.insert(r.id).second) throw DataError("duplicate image id '" + r.id + "'" + where(r));
    auto [it, inserted] = place_index.emplace(r.place, places_.size());
    if (inserted) {
      places_.push_back(r.place);
      members_.emplace_back();
    }
    members_[it->second].push_back(i);
    labels_.push_back(it->second);
  }
}

std::filesystem::path Manifest::tensor_path(std::size_t i) const {
  const auto& t = records_.at(i).tensor;
  return t.is_absolute() || base_dir_.empty() ? t : base_dir_ / t;
}

Manifest Manifest::subset(std::span<const std::size_t> indices) const {
  std::vector<PlaceRecord> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(records_.at(i));
  return Manifest(std::move(picked), base_dir_);
}

Manifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<PlaceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    PlaceRecord r;
    r.line = line_no;
    try {
      r.id = j.at("id").get<std::string>();
      r.place = j.at("place").get<std::string>();
      r.position = {j.at("lat").get<double>(), j.at("lon").get<double>()};
      r.tensor = j.at("tensor").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), line_no);
    }
    if (!is_valid(r.position)) {
      throw ParseError("coordinates out of range: lat=" + std::to_string(r.position.lat) +
                           " lon=" + std::to_string(r.position.lon),
                       line_no);
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) spdlog::warn("manifest is empty");
  return Manifest(std::move(records), base_dir);
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  for (const auto& r : manifest.records()) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["place"] = r.place;
    j["lat"] = r.position.lat;
    j["lon"] = r.position.lon;
    j["tensor"] = r.tensor.generic_string();
    out << j.dump() << '\n';
  }
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_manifest(out, manifest);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mixagg
