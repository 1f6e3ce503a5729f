#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixagg/feature_store.hpp"
#include "mixagg/geo.hpp"
#include "mixagg/model.hpp"

namespace mixagg {

inline constexpr double kDefaultSuccessRadiusM = 25.0;

/// Reference or query descriptors: one unit-norm row per id, with optional
/// geotags (all rows or none). Immutable once built.
class DescriptorDb {
 public:
  DescriptorDb() = default;
  /// Throws DataError on duplicate ids, rows off unit norm by more than
  /// 1e-5, or a geotag count that is neither 0 nor the row count.
  DescriptorDb(std::vector<std::string> ids, Tensor matrix, std::vector<GeoPoint> positions = {});

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim() const { return matrix_.cols(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Tensor& matrix() const noexcept { return matrix_; }
  std::span<const float> row(std::size_t i) const { return matrix_.row(i); }
  bool has_geo() const noexcept { return !positions_.empty(); }
  const std::vector<GeoPoint>& positions() const noexcept { return positions_; }

  /// Writes `path` (MXT1 N x D matrix) and `path`.ids (tab-separated
  /// id, lat, lon per line; only ids when untagged).
  void save(const std::filesystem::path& path) const;
  static DescriptorDb load(const std::filesystem::path& path);

 private:
  std::vector<std::string> ids_;
  Tensor matrix_;
  std::vector<GeoPoint> positions_;
};

/// Descriptors for the given manifest records (all when empty), computed in
/// batches of `batch_size`. Ids and geotags come from the manifest.
DescriptorDb extract_descriptors(const MixVprParams& params, FeatureStore& store,
                                 std::span<const std::size_t> records = {},
                                 std::size_t batch_size = 32);

/// Dot-product similarity of the query against every row.
std::vector<float> similarities(const DescriptorDb& db, std::span<const float> query);

struct TopkResult {
  std::vector<std::size_t> indices;  // best first
  bool truncated = false;            // fewer than k candidates available
};

/// The k rows most similar to the query, in descending similarity; ties go
/// to the lower row index. Rows listed in `exclude` are skipped.
TopkResult topk(const DescriptorDb& db, std::span<const float> query, std::size_t k,
                std::span<const std::size_t> exclude = {});

/// Reference indices within `radius_m` of each query.
std::vector<std::vector<std::size_t>> ground_truth(std::span<const GeoPoint> queries,
                                                   std::span<const GeoPoint> references,
                                                   double radius_m = kDefaultSuccessRadiusM);
/// Throws DataError if either database lacks geotags.
std::vector<std::vector<std::size_t>> ground_truth(const DescriptorDb& queries,
                                                   const DescriptorDb& references,
                                                   double radius_m = kDefaultSuccessRadiusM);

struct RecallCounts {
  std::vector<double> recalls;  // one per k
  std::size_t evaluated = 0;
  std::size_t excluded = 0;     // queries with no positives
};

/// Fraction of queries (with at least one positive) whose first k ranked
/// candidates contain a positive.
RecallCounts recall_from_rankings(const std::vector<std::vector<std::size_t>>& rankings,
                                  const std::vector<std::vector<std::size_t>>& positives,
                                  std::span<const std::size_t> ks);

struct EvalOptions {
  std::vector<std::size_t> ks{1, 5, 10};
  /// Skip references carrying the query's own id (leave-one-out).
  bool exclude_same_id = false;
};

struct QueryResult {
  std::string id;
  std::vector<std::string> ranked;  // top max(ks) reference ids
  bool excluded = false;
};

struct EvalReport {
  std::vector<std::size_t> ks;
  std::vector<double> recalls;
  std::size_t num_queries = 0;       // queries counted in the denominators
  std::size_t excluded_queries = 0;  // queries without any positive
  std::vector<QueryResult> per_query;
  double search_ms_per_query = 0.0;
  std::optional<double> extraction_ms_per_descriptor;
  std::string config_hash;

  double recall_at(std::size_t k) const;
  /// {"recalls": {"1": ...}, "num_queries", "excluded_queries",
  ///  "timing_ms": {...}, "config_hash", "per_query": [...]}
  std::string to_json(int indent = 2) const;
};

EvalReport recall_at_k(const DescriptorDb& queries, const DescriptorDb& references,
                       const std::vector<std::vector<std::size_t>>& positives,
                       const EvalOptions& options = {});

}  // namespace mixagg
