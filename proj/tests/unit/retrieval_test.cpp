#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "mixagg/errors.hpp"
#include "mixagg/retrieval.hpp"
#include "test_util.hpp"

namespace mixagg {
namespace {

Tensor unit_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor m({n, dim});
  for (std::size_t i = 0; i < n; ++i) {
    double ss = 0.0;
    std::vector<double> v(dim);
    for (auto& x : v) {
      x = g(rng);
      ss += x * x;
    }
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = static_cast<float>(v[j] / std::sqrt(ss));
  }
  return m;
}

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "r") {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

// Full stable sort on the same float dot products; ties keep index order.
std::vector<std::size_t> sort_oracle(const Tensor& db, std::span<const float> q) {
  std::vector<float> sims(db.rows());
  for (std::size_t i = 0; i < db.rows(); ++i) {
    float acc = 0.0f;
    for (std::size_t j = 0; j < q.size(); ++j) acc += db(i, j) * q[j];
    sims[i] = acc;
  }
  std::vector<std::size_t> order(db.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return sims[a] > sims[b]; });
  return order;
}

TEST(Topk, MatchesFullSortOracle) {
  const auto m = unit_rows(1000, 16, 1);
  const DescriptorDb db(make_ids(1000), m);
  const auto queries = unit_rows(20, 16, 2);
  for (std::size_t q = 0; q < 20; ++q) {
    const auto oracle = sort_oracle(m, queries.row(q));
    for (std::size_t k : {1u, 5u, 10u, 100u}) {
      const auto got = topk(db, queries.row(q), k);
      EXPECT_FALSE(got.truncated);
      EXPECT_EQ(got.indices, std::vector<std::size_t>(oracle.begin(), oracle.begin() + k));
    }
  }
}

TEST(Topk, QueryEqualToRowComesFirst) {
  const auto m = unit_rows(50, 8, 3);
  const DescriptorDb db(make_ids(50), m);
  for (std::size_t i = 0; i < 50; i += 7) EXPECT_EQ(topk(db, m.row(i), 1).indices[0], i);
}

TEST(Topk, TwoDimensionalToy) {
  const DescriptorDb db({"x", "y"}, Tensor::matrix({{1, 0}, {0, 1}}));
  const double n = std::hypot(0.9, 0.436);
  const std::vector<float> q{static_cast<float>(0.9 / n), static_cast<float>(0.436 / n)};
  EXPECT_EQ(topk(db, q, 2).indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Topk, TiesGoToLowerIndex) {
  const DescriptorDb db({"a", "b", "c"}, Tensor::matrix({{0, 1}, {1, 0}, {1, 0}}));
  const std::vector<float> q{1, 0};
  EXPECT_EQ(topk(db, q, 3).indices, (std::vector<std::size_t>{1, 2, 0}));
}

TEST(Topk, OversizedKReturnsAllFlagged) {
  const DescriptorDb db(make_ids(3), unit_rows(3, 4, 1));
  const auto r = topk(db, db.row(0), 10);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.indices.size(), 3u);
  EXPECT_THROW(topk(db, db.row(0), 0), ContractError);
}

TEST(Topk, ExcludeSkipsRows) {
  const auto m = unit_rows(10, 4, 5);
  const DescriptorDb db(make_ids(10), m);
  const std::size_t skip[] = {3};
  const auto r = topk(db, m.row(3), 10, skip);
  EXPECT_EQ(r.indices.size(), 9u);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(std::count(r.indices.begin(), r.indices.end(), 3u), 0);
}

TEST(DescriptorDb, Validation) {
  EXPECT_THROW(DescriptorDb({"a", "b"}, Tensor::matrix({{1, 0}, {0.5f, 0}})), DataError);
  EXPECT_THROW(DescriptorDb({"a", "a"}, Tensor::matrix({{1, 0}, {0, 1}})), DataError);
  EXPECT_THROW(DescriptorDb({"a"}, Tensor::matrix({{1, 0}, {0, 1}})), DataError);
  EXPECT_THROW(DescriptorDb({"a"}, Tensor::matrix({{1, 0}}), {{1, 1}, {2, 2}}), DataError);
}

TEST(DescriptorDb, SaveLoadRoundTrip) {
  testing::TempDir dir("db");
  const DescriptorDb tagged(make_ids(4), unit_rows(4, 3, 1), {{1, 2}, {3, 4}, {47.123456789012, 8.5}, {-5, -6}});
  tagged.save(dir / "tagged");
  const auto a = DescriptorDb::load(dir / "tagged");
  EXPECT_EQ(a.ids(), tagged.ids());
  EXPECT_EQ(a.matrix(), tagged.matrix());
  EXPECT_EQ(a.positions(), tagged.positions());

  const DescriptorDb plain(make_ids(2), unit_rows(2, 3, 2));
  plain.save(dir / "plain");
  EXPECT_FALSE(DescriptorDb::load(dir / "plain").has_geo());
}

TEST(GroundTruth, RadiusBoundaries) {
  const GeoPoint q{48.8566, 2.3522};
  const std::vector<GeoPoint> refs{{48.8566, 2.3522}, {48.8570, 2.3522}};
  const std::vector<GeoPoint> qs{q};
  EXPECT_EQ(ground_truth(qs, refs, 25.0)[0], (std::vector<std::size_t>{0}));
  EXPECT_EQ(ground_truth(qs, refs, 50.0)[0], (std::vector<std::size_t>{0, 1}));
}

TEST(GroundTruth, NeedsGeotags) {
  const DescriptorDb plain(make_ids(2), unit_rows(2, 3, 2));
  const DescriptorDb tagged(make_ids(2), unit_rows(2, 3, 2), {{1, 1}, {2, 2}});
  EXPECT_THROW(ground_truth(plain, tagged), DataError);
  EXPECT_THROW(ground_truth(tagged, plain), DataError);
}

TEST(GroundTruth, FarReferencesNeverJoinPositives) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> jitter(-0.001, 0.001);
  std::vector<GeoPoint> qs, refs;
  for (int i = 0; i < 20; ++i) {
    qs.push_back({10 + jitter(rng), 10 + jitter(rng)});
    refs.push_back({10 + jitter(rng), 10 + jitter(rng)});
  }
  const auto before = ground_truth(qs, refs, 100.0);
  for (int i = 0; i < 20; ++i) refs.push_back({-40 + jitter(rng), 100 + jitter(rng)});
  EXPECT_EQ(ground_truth(qs, refs, 100.0), before);
}

TEST(Recall, HandEnumeratedTenQueries) {
  const std::vector<std::vector<std::size_t>> ranked{
      {3, 1, 4, 0, 2}, {0, 2, 1, 3, 4}, {4, 3, 2, 1, 0}, {1, 0, 2, 3, 4}, {2, 4, 0, 1, 3},
      {0, 1, 2, 3, 4}, {3, 2, 1, 0, 4}, {1, 2, 3, 4, 0}, {4, 0, 1, 2, 3}, {2, 3, 0, 4, 1}};
  const std::vector<std::vector<std::size_t>> pos{{3}, {1}, {}, {4}, {4, 0}, {9}, {3, 2}, {}, {1}, {2}};
  const std::size_t ks[] = {1, 2, 3, 5};
  // First-hit ranks: q0 0, q1 2, q3 4, q4 1, q5 none, q6 0, q8 2, q9 0; q2, q7 excluded.
  const auto r = recall_from_rankings(ranked, pos, ks);
  EXPECT_EQ(r.evaluated, 8u);
  EXPECT_EQ(r.excluded, 2u);
  EXPECT_DOUBLE_EQ(r.recalls[0], 3.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.recalls[1], 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.recalls[2], 6.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.recalls[3], 7.0 / 8.0);
}

struct Scene {
  DescriptorDb queries, refs;
};

// Noisy copies of reference descriptors scattered over a few places.
Scene random_scene(std::uint64_t seed, std::size_t n_refs = 60, std::size_t n_queries = 25) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> jitter(-0.0004, 0.0004);
  const auto ref_m = unit_rows(n_refs, 8, rng());
  std::vector<GeoPoint> ref_pos;
  for (std::size_t i = 0; i < n_refs; ++i) ref_pos.push_back({45 + 0.001 * (i % 10), 7 + jitter(rng)});
  Tensor q_m({n_queries, 8});
  std::vector<GeoPoint> q_pos;
  for (std::size_t q = 0; q < n_queries; ++q) {
    const std::size_t src = rng() % n_refs;
    double ss = 0.0;
    for (std::size_t j = 0; j < 8; ++j) {
      q_m(q, j) = static_cast<float>(ref_m(src, j) + 0.6 * g(rng));
      ss += static_cast<double>(q_m(q, j)) * q_m(q, j);
    }
    for (std::size_t j = 0; j < 8; ++j) q_m(q, j) = static_cast<float>(q_m(q, j) / std::sqrt(ss));
    q_pos.push_back({ref_pos[src].lat + jitter(rng) * 0.1, ref_pos[src].lon});
  }
  return {DescriptorDb(make_ids(n_queries, "q"), q_m, q_pos), DescriptorDb(make_ids(n_refs), ref_m, ref_pos)};
}

TEST(Recall, IdenticalDatabasesGiveOne) {
  const auto s = random_scene(1);
  const auto gt = ground_truth(s.refs, s.refs);
  EXPECT_EQ(recall_at_k(s.refs, s.refs, gt).recall_at(1), 1.0);
}

TEST(Recall, MonotoneInKAndRadius) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_scene(seed);
    EvalOptions opts;
    opts.ks = {1, 2, 3, 5, 10, 20};
    std::vector<double> prev_hits(opts.ks.size(), 0.0);
    std::vector<double> prev_recall(opts.ks.size(), 0.0);
    std::size_t prev_excluded = s.queries.size();
    for (double radius : {5.0, 25.0, 60.0, 150.0, 400.0}) {
      const auto gt = ground_truth(s.queries, s.refs, radius);
      const auto r = recall_at_k(s.queries, s.refs, gt, opts);
      for (std::size_t i = 0; i < r.recalls.size(); ++i) {
        EXPECT_GE(r.recalls[i], 0.0);
        EXPECT_LE(r.recalls[i], 1.0);
        if (i) EXPECT_GE(r.recalls[i], r.recalls[i - 1]);
        // Hit counts never drop as the radius grows; the ratio cannot drop
        // either while the set of evaluated queries is unchanged.
        const double hits = r.recalls[i] * static_cast<double>(r.num_queries);
        EXPECT_GE(hits + 1e-9, prev_hits[i]);
        if (r.excluded_queries == prev_excluded) EXPECT_GE(r.recalls[i], prev_recall[i]);
        prev_hits[i] = hits;
      }
      prev_recall = r.recalls;
      prev_excluded = r.excluded_queries;
    }
  }
}

TEST(Recall, ShuffledReferencesGiveSameValues) {
  const auto s = random_scene(4);
  std::vector<std::size_t> perm(s.refs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  Tensor m({s.refs.size(), s.refs.dim()});
  std::vector<std::string> ids;
  std::vector<GeoPoint> pos;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    std::copy(s.refs.row(perm[i]).begin(), s.refs.row(perm[i]).end(), m.row(i).begin());
    ids.push_back(s.refs.ids()[perm[i]]);
    pos.push_back(s.refs.positions()[perm[i]]);
  }
  const DescriptorDb shuffled(ids, m, pos);
  const auto a = recall_at_k(s.queries, s.refs, ground_truth(s.queries, s.refs));
  const auto b = recall_at_k(s.queries, shuffled, ground_truth(s.queries, shuffled));
  EXPECT_EQ(a.recalls, b.recalls);
}

TEST(Recall, ExcludeSelfDropsOwnMatch) {
  const auto s = random_scene(2);
  EvalOptions opts;
  opts.exclude_same_id = true;
  const auto r = recall_at_k(s.refs, s.refs, ground_truth(s.refs, s.refs), opts);
  for (const auto& q : r.per_query) EXPECT_NE(q.ranked.front(), q.id);
}

TEST(Recall, Errors) {
  const auto s = random_scene(3);
  EXPECT_THROW(recall_at_k(DescriptorDb(), s.refs, {}), ContractError);
  EvalOptions opts;
  opts.ks = {0};
  EXPECT_THROW(recall_at_k(s.queries, s.refs, ground_truth(s.queries, s.refs), opts), ContractError);
  EXPECT_THROW(recall_at_k(s.queries, s.refs, {}), ContractError);
}

TEST(EvalReport, JsonLayout) {
  const auto s = random_scene(6);
  auto r = recall_at_k(s.queries, s.refs, ground_truth(s.queries, s.refs));
  r.config_hash = "0123456789abcdef";
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_TRUE(j["recalls"].contains("1"));
  EXPECT_TRUE(j["recalls"].contains("5"));
  EXPECT_TRUE(j["recalls"].contains("10"));
  EXPECT_EQ(j["num_queries"].get<std::size_t>() + j["excluded_queries"].get<std::size_t>(), 25u);
  EXPECT_FALSE(j["timing_ms"]["deterministic"].get<bool>());
  EXPECT_EQ(j["config_hash"], "0123456789abcdef");
  EXPECT_EQ(j["per_query"].size(), 25u);
  EXPECT_EQ(j["per_query"][0]["topk"].size(), 10u);
}

}  // namespace
}  // namespace mixagg
