#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "capforge/pool.hpp"
#include "capforge/strategy.hpp"
#include "capforge/types.hpp"

namespace capforge {

struct KMeansResult {
  std::uint32_t k = 0;
  std::uint32_t dim = 0;
  std::vector<double> centroids;            // k * dim, row-major
  std::vector<std::uint32_t> assignments;   // one per point
  std::vector<double> sse_history;          // SSE after every assignment step
  std::uint32_t iterations = 0;             // centroid updates performed

  double sse() const noexcept { return sse_history.empty() ? 0.0 : sse_history.back(); }
  std::span<const double> centroid(std::size_t c) const noexcept {
    return {centroids.data() + c * dim, dim};
  }
};

// Lloyd's algorithm with greedy k-means++ seeding drawn from params.seed. Stops
// after params.max_iters updates or once the relative SSE improvement drops
// below params.tol. Assignment ties go to the lower centroid index; an empty
// cluster is re-seeded at the point farthest from its centroid. Results do
// not depend on `workers`. Throws DomainError when k is 0 or exceeds the
// number of points.
KMeansResult kmeans(const EmbeddingMatrix& points, const ClusterParams& params,
                    std::size_t workers = 1);

// For each reference vector, the index of the centroid with the highest
// cosine similarity (ties to the lower index).
std::vector<std::uint32_t> nearest_centroids(const KMeansResult& clusters,
                                             const EmbeddingMatrix& references);

// Keeps records whose cluster centre is the nearest centroid of at least
// one reference embedding.
SelectionMask in1k_cluster_mask(const EmbeddingMatrix& image_embs,
                                const EmbeddingMatrix& references,
                                const ClusterParams& params, std::size_t workers = 1);
SelectionMask in1k_cluster_mask(const PoolHandle& handle, const EmbeddingMatrix& references,
                                const ClusterParams& params, std::size_t workers = 1);

}  // namespace capforge
