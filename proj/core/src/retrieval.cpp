#include "mixagg/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "mixagg/errors.hpp"
#include "mixagg/tensor_io.hpp"

namespace mixagg {

DescriptorDb::DescriptorDb(std::vector<std::string> ids, Tensor matrix, std::vector<GeoPoint> positions)
    : ids_(std::move(ids)), matrix_(std::move(matrix)), positions_(std::move(positions)) {
  if (matrix_.rank() != 2 || matrix_.rows() != ids_.size()) {
    throw DataError("descriptor matrix dims " + to_string(matrix_.dims()) + " do not match " +
                    std::to_string(ids_.size()) + " ids");
  }
  if (!positions_.empty() && positions_.size() != ids_.size()) {
    throw DataError("descriptor db has " + std::to_string(positions_.size()) + " geotags for " +
                    std::to_string(ids_.size()) + " rows");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!seen.insert(ids_[i]).second) throw DataError("duplicate descriptor id '" + ids_[i] + "'");
    double ss = 0.0;
    for (float v : matrix_.row(i)) ss += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(ss) - 1.0) > 1e-5) {
      throw DataError("descriptor '" + ids_[i] + "' is not unit-norm (norm " +
                      std::to_string(std::sqrt(ss)) + ")");
    }
  }
  for (const auto& p : positions_) require_valid(p);
}

void DescriptorDb::save(const std::filesystem::path& path) const {
  save_tensor(path, matrix_);
  auto ids_path = path;
  ids_path += ".ids";
  std::ofstream out(ids_path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + ids_path.string());
  out.precision(17);
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    out << ids_[i];
    if (has_geo()) out << '\t' << positions_[i].lat << '\t' << positions_[i].lon;
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + ids_path.string());
}

DescriptorDb DescriptorDb::load(const std::filesystem::path& path) {
  auto matrix = load_tensor(path);
  auto ids_path = path;
  ids_path += ".ids";
  std::ifstream in(ids_path);
  if (!in) throw IoError("cannot open " + ids_path.string());
  std::vector<std::string> ids;
  std::vector<GeoPoint> positions;
  std::string line;
  std::size_t line_no = 0;
  std::size_t tagged = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id;
    std::getline(fields, id, '\t');
    std::string lat, lon;
    if (std::getline(fields, lat, '\t') && std::getline(fields, lon, '\t')) {
      try {
        positions.push_back({std::stod(lat), std::stod(lon)});
      } catch (const std::exception&) {
        throw ParseError("bad coordinates in " + ids_path.string(), line_no);
      }
      ++tagged;
    }
    ids.push_back(std::move(id));
  }
  if (tagged != 0 && tagged != ids.size()) {
    throw DataError(ids_path.string() + ": geotags present on only some rows");
  }
  return DescriptorDb(std::move(ids), std::move(matrix), std::move(positions));
}

DescriptorDb extract_descriptors(const MixVprParams& params, FeatureStore& store,
                                 std::span<const std::size_t> records, std::size_t batch_size) {
  std::vector<std::size_t> picked(records.begin(), records.end());
  if (picked.empty()) {
    picked.resize(store.size());
    for (std::size_t i = 0; i < picked.size(); ++i) picked[i] = i;
  }
  const std::size_t dim = params.config().descriptor_dim();
  const auto bound = bind(params, false);
  std::vector<float> data;
  data.reserve(picked.size() * dim);
  std::vector<std::string> ids;
  std::vector<GeoPoint> positions;
  batch_size = std::max<std::size_t>(1, batch_size);
  for (std::size_t start = 0; start < picked.size(); start += batch_size) {
    const std::size_t end = std::min(picked.size(), start + batch_size);
    std::vector<const Tensor*> inputs;
    for (std::size_t i = start; i < end; ++i) inputs.push_back(&store.get(picked[i]));
    const auto out = aggregate_batch<float>(bound, inputs);
    const auto values = out.value().data();
    data.insert(data.end(), values.begin(), values.end());
    for (std::size_t i = start; i < end; ++i) {
      const auto& rec = store.manifest()[picked[i]];
      ids.push_back(rec.id);
      positions.push_back(rec.position);
    }
  }
  if (ids.empty()) throw DataError("no records to extract");
  return DescriptorDb(std::move(ids), Tensor({picked.size(), dim}, std::move(data)),
                      std::move(positions));
}

std::vector<float> similarities(const DescriptorDb& db, std::span<const float> query) {
  if (query.size() != db.dim()) {
    throw ShapeError("query has " + std::to_string(query.size()) + " dims, db has " +
                     std::to_string(db.dim()));
  }
  std::vector<float> sims(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const auto r = db.row(i);
    float acc = 0.0f;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * query[j];
    sims[i] = acc;
  }
  return sims;
}

TopkResult topk(const DescriptorDb& db, std::span<const float> query, std::size_t k,
                std::span<const std::size_t> exclude) {
  if (k == 0) throw ContractError("topk needs k >= 1");
  if (db.empty()) throw ContractError("topk on an empty database");
  const auto sims = similarities(db, query);
  std::vector<std::size_t> candidates;
  candidates.reserve(db.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) candidates.push_back(i);
  }
  TopkResult result;
  result.truncated = k > candidates.size();
  const std::size_t take = std::min(k, candidates.size());
  const auto better = [&sims](std::size_t a, std::size_t b) {
    return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), better);
  candidates.resize(take);
  result.indices = std::move(candidates);
  return result;
}

std::vector<std::vector<std::size_t>> ground_truth(std::span<const GeoPoint> queries,
                                                   std::span<const GeoPoint> references,
                                                   double radius_m) {
  if (!(radius_m >= 0.0)) throw ParamError("success radius must be >= 0");
  std::vector<std::vector<std::size_t>> positives(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t r = 0; r < references.size(); ++r) {
      if (haversine_m(queries[q], references[r]) <= radius_m) positives[q].push_back(r);
    }
  }
  return positives;
}

std::vector<std::vector<std::size_t>> ground_truth(const DescriptorDb& queries,
                                                   const DescriptorDb& references,
                                                   double radius_m) {
  if (!queries.has_geo() || !references.has_geo()) {
    throw DataError("ground truth needs geotags on both query and reference descriptors");
  }
  return ground_truth(queries.positions(), references.positions(), radius_m);
}

RecallCounts recall_from_rankings(const std::vector<std::vector<std::size_t>>& rankings,
                                  const std::vector<std::vector<std::size_t>>& positives,
                                  std::span<const std::size_t> ks) {
  if (rankings.size() != positives.size()) {
    throw ContractError("ground truth covers " + std::to_string(positives.size()) +
                        " queries, rankings cover " + std::to_string(rankings.size()));
  }
  RecallCounts out;
  out.recalls.assign(ks.size(), 0.0);
  std::vector<std::size_t> hits(ks.size(), 0);
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (positives[q].empty()) {
      ++out.excluded;
      continue;
    }
    ++out.evaluated;
    const std::unordered_set<std::size_t> pos(positives[q].begin(), positives[q].end());
    // Rank of the first positive, or past the end.
    std::size_t first = rankings[q].size();
    for (std::size_t i = 0; i < rankings[q].size(); ++i) {
      if (pos.count(rankings[q][i])) {
        first = i;
        break;
      }
    }
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (first < ks[j]) ++hits[j];
    }
  }
  if (out.evaluated > 0) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      out.recalls[j] = static_cast<double>(hits[j]) / static_cast<double>(out.evaluated);
    }
  }
  return out;
}

double EvalReport::recall_at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recalls[i];
  }
  throw ContractError("recall@" + std::to_string(k) + " was not evaluated");
}

std::string EvalReport::to_json(int indent) const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json recall_obj = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < ks.size(); ++i) recall_obj[std::to_string(ks[i])] = recalls[i];
  j["recalls"] = recall_obj;
  j["num_queries"] = num_queries;
  j["excluded_queries"] = excluded_queries;
  nlohmann::ordered_json timing;
  timing["search_per_query"] = search_ms_per_query;
  if (extraction_ms_per_descriptor) {
    timing["extraction_per_descriptor"] = *extraction_ms_per_descriptor;
  } else {
    timing["extraction_per_descriptor"] = nullptr;
  }
  timing["deterministic"] = false;
  j["timing_ms"] = timing;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json queries = nlohmann::ordered_json::array();
  for (const auto& q : per_query) {
    nlohmann::ordered_json e;
    e["id"] = q.id;
    e["excluded"] = q.excluded;
    e["topk"] = q.ranked;
    queries.push_back(std::move(e));
  }
  j["per_query"] = std::move(queries);
  return j.dump(indent);
}

EvalReport recall_at_k(const DescriptorDb& queries, const DescriptorDb& references,
                       const std::vector<std::vector<std::size_t>>& positives,
                       const EvalOptions& options) {
  if (queries.empty()) throw ContractError("recall_at_k needs at least one query");
  if (references.empty()) throw ContractError("recall_at_k needs a nonempty reference database");
  if (options.ks.empty()) throw ContractError("recall_at_k needs at least one k");
  for (auto k : options.ks) {
    if (k == 0) throw ContractError("recall@k needs k >= 1");
  }
  if (positives.size() != queries.size()) {
    throw ContractError("ground truth covers " + std::to_string(positives.size()) +
                        " queries, database has " + std::to_string(queries.size()));
  }
  const std::size_t kmax = *std::max_element(options.ks.begin(), options.ks.end());

  std::unordered_map<std::string, std::size_t> ref_index;
  if (options.exclude_same_id) {
    for (std::size_t i = 0; i < references.size(); ++i) ref_index.emplace(references.ids()[i], i);
  }

  std::vector<std::vector<std::size_t>> rankings(queries.size());
  std::vector<std::vector<std::size_t>> effective_pos = positives;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<std::size_t> exclude;
    if (options.exclude_same_id) {
      const auto it = ref_index.find(queries.ids()[q]);
      if (it != ref_index.end()) {
        exclude.push_back(it->second);
        std::erase(effective_pos[q], it->second);
      }
    }
    rankings[q] = topk(references, queries.row(q), kmax, exclude).indices;
  }
  const auto t1 = std::chrono::steady_clock::now();

  const auto counts = recall_from_rankings(rankings, effective_pos, options.ks);
  EvalReport report;
  report.ks = options.ks;
  report.recalls = counts.recalls;
  report.num_queries = counts.evaluated;
  report.excluded_queries = counts.excluded;
  report.search_ms_per_query =
      std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(queries.size());
  report.per_query.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    QueryResult r;
    r.id = queries.ids()[q];
    r.excluded = effective_pos[q].empty();
    for (auto i : rankings[q]) r.ranked.push_back(references.ids()[i]);
    report.per_query.push_back(std::move(r));
  }
  return report;
}

}  // namespace mixagg
