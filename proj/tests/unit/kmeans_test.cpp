#include <gtest/gtest.h>

#include <random>

#include "capforge/errors.hpp"
#include "capforge/kmeans.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace capforge;

namespace {

EmbeddingMatrix points(std::initializer_list<std::vector<float>> rows) {
  EmbeddingMatrix m("image", static_cast<std::uint32_t>(rows.begin()->size()));
  for (const auto& r : rows) m.append_row(r);
  return m;
}

EmbeddingMatrix blobs(std::mt19937_64& rng, std::size_t n, std::uint32_t dim, std::size_t centers) {
  std::normal_distribution<float> nd;
  std::vector<std::vector<float>> c(centers, std::vector<float>(dim));
  for (auto& v : c)
    for (auto& x : v) x = 4.0f * nd(rng);
  EmbeddingMatrix m("image", dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> p = c[rng() % centers];
    for (auto& x : p) x += nd(rng);
    m.append_row(p);
  }
  return m;
}

}  // namespace

TEST(KMeans, FourPointAnalyticOptimum) {
  const auto pts = points({{0, 0}, {0, 1}, {10, 0}, {10, 1}});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, ClusterParams{2, 50, 0.0, seed});
    EXPECT_NEAR(r.sse(), 1.0, 1e-9);
    std::set<std::pair<double, double>> c{{r.centroid(0)[0], r.centroid(0)[1]}, {r.centroid(1)[0], r.centroid(1)[1]}};
    EXPECT_EQ(c, (std::set<std::pair<double, double>>{{0.0, 0.5}, {10.0, 0.5}}));
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
  }
}

TEST(KMeans, KEqualsNGivesZeroSse) {
  std::mt19937_64 rng(1);
  const auto pts = testutil::random_matrix(rng, "image", 12, 5);
  const auto r = kmeans(pts, ClusterParams{12, 10, 1e-4, 0});
  EXPECT_NEAR(r.sse(), 0.0, 1e-12);
  EXPECT_EQ(std::set<std::uint32_t>(r.assignments.begin(), r.assignments.end()).size(), 12u);
}

TEST(KMeans, DomainErrors) {
  const auto pts = points({{0, 0}, {1, 1}});
  EXPECT_THROW(kmeans(pts, ClusterParams{3, 10, 0, 0}), DomainError);
  EXPECT_THROW(kmeans(pts, ClusterParams{0, 10, 0, 0}), DomainError);
}

TEST(KMeans, DeterministicAcrossRunsAndWorkers) {
  std::mt19937_64 rng(2);
  const auto pts = blobs(rng, 3000, 8, 10);
  const ClusterParams p{10, 30, 1e-6, 5};
  const auto a = kmeans(pts, p, 1);
  const auto b = kmeans(pts, p, 1);
  const auto c = kmeans(pts, p, 6);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.assignments, c.assignments);
  EXPECT_EQ(a.centroids, c.centroids);
  EXPECT_EQ(a.sse_history, c.sse_history);
}

TEST(KMeans, SseNonIncreasingAndAssignmentsAreArgmin) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 50 + rng() % 400;
    const auto pts = blobs(rng, n, 2 + static_cast<std::uint32_t>(rng() % 6), 2 + rng() % 6);
    const std::uint32_t k = 1 + static_cast<std::uint32_t>(rng() % 12);
    const auto r = kmeans(pts, ClusterParams{k, 100, 0.0, static_cast<std::uint64_t>(t)});
    for (std::size_t i = 1; i < r.sse_history.size(); ++i)
      ASSERT_LE(r.sse_history[i], r.sse_history[i - 1] * (1 + 1e-12));
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t best = 0;
      double bd = oracle::sq_dist(pts.row(i), r.centroid(0));
      for (std::uint32_t c = 1; c < k; ++c) {
        const double d = oracle::sq_dist(pts.row(i), r.centroid(c));
        if (d < bd) bd = d, best = c;
      }
      ASSERT_EQ(r.assignments[i], best);
      sse += bd;
    }
    EXPECT_NEAR(r.sse(), sse, 1e-9 * std::max(1.0, sse));
  }
}

TEST(KMeans, DuplicatePointsDoNotLeaveEmptyClusters) {
  EmbeddingMatrix pts("image", 2);
  for (int i = 0; i < 20; ++i) pts.append_row(std::vector<float>{1, 1});
  pts.append_row(std::vector<float>{5, 5});
  pts.append_row(std::vector<float>{9, 1});
  const auto r = kmeans(pts, ClusterParams{3, 20, 0, 1});
  EXPECT_NEAR(r.sse(), 0.0, 1e-12);
}

TEST(In1k, CentroidsAsReferencesKeepEverything) {
  std::mt19937_64 rng(4);
  const auto pts = blobs(rng, 500, 6, 5);
  const ClusterParams p{8, 30, 1e-6, 0};
  const auto r = kmeans(pts, p);
  EmbeddingMatrix refs("ref", 6);
  for (std::uint32_t c = 0; c < p.k; ++c) {
    std::vector<float> row(r.centroid(c).begin(), r.centroid(c).end());
    refs.append_row(row);
  }
  EXPECT_EQ(in1k_cluster_mask(pts, refs, p).count(), 500u);
}

TEST(In1k, ReferencesNearOneCentroidKeepItsCluster) {
  std::mt19937_64 rng(5);
  const auto pts = blobs(rng, 400, 4, 4);
  const ClusterParams p{4, 30, 1e-6, 2};
  const auto r = kmeans(pts, p);
  EmbeddingMatrix refs("ref", 4);
  for (float s : {1.0f, 2.0f, 0.5f}) {
    std::vector<float> row;
    for (double x : r.centroid(0)) row.push_back(static_cast<float>(x) * s);
    refs.append_row(row);
  }
  const auto nearest = nearest_centroids(r, refs);
  for (auto c : nearest) EXPECT_EQ(c, 0u);
  const auto mask = in1k_cluster_mask(pts, refs, p);
  for (std::size_t i = 0; i < 400; ++i) EXPECT_EQ(mask.test(i), r.assignments[i] == 0u);
  EXPECT_GT(mask.count(), 0u);
}

TEST(In1k, NonEmptyForAnyReferencesAndDimensionChecked) {
  std::mt19937_64 rng(6);
  const auto pts = blobs(rng, 300, 5, 3);
  for (int t = 0; t < 10; ++t) {
    const auto refs = testutil::random_matrix(rng, "ref", 1 + t, 5);
    EXPECT_GT(in1k_cluster_mask(pts, refs, ClusterParams{6, 20, 1e-4, 0}).count(), 0u);
  }
  const auto bad = testutil::random_matrix(rng, "ref", 2, 4);
  EXPECT_THROW(in1k_cluster_mask(pts, bad, ClusterParams{6, 20, 1e-4, 0}), DomainError);
}
