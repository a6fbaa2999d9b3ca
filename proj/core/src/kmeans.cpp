#include "capforge/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "capforge/errors.hpp"
#include "capforge/parallel.hpp"
#include "capforge/rng.hpp"

namespace capforge {

namespace {

constexpr std::size_t kAssignBlock = 1024;
constexpr std::uint64_t kKMeansTag = 0x6b6d65616e73ULL;

double squared_distance(std::span<const float> p, std::span<const double> c) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = static_cast<double>(p[i]) - c[i];
    d2 += diff * diff;
  }
  return d2;
}

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<double> distance;  // squared distance to the assigned centroid
  double sse = 0.0;
};

// Block partition is fixed, and block partial sums are added in block order,
// so the SSE is bit-identical for every worker count.
Assignment assign(const EmbeddingMatrix& points, const KMeansResult& km, std::size_t workers) {
  const std::size_t n = points.rows();
  Assignment a{std::vector<std::uint32_t>(n), std::vector<double>(n), 0.0};
  const std::size_t blocks = (n + kAssignBlock - 1) / kAssignBlock;
  std::vector<double> partial(blocks, 0.0);
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kAssignBlock);
    double sum = 0.0;
    for (std::size_t i = b * kAssignBlock; i < end; ++i) {
      std::uint32_t best = 0;
      double best_d = squared_distance(points.row(i), km.centroid(0));
      for (std::uint32_t c = 1; c < km.k; ++c) {
        const double d = squared_distance(points.row(i), km.centroid(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      a.cluster[i] = best;
      a.distance[i] = best_d;
      sum += best_d;
    }
    partial[b] = sum;
  });
  for (double s : partial) a.sse += s;
  return a;
}

// Greedy k-means++: each step draws 2 + floor(ln k) D^2-weighted candidates
// and keeps the one that lowers the potential most.
void seed_plus_plus(const EmbeddingMatrix& points, KMeansResult& km, std::uint64_t seed,
                    std::size_t workers) {
  const std::size_t n = points.rows();
  CounterRng rng(seed, 0, kKMeansTag);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(km.k)));

  auto place = [&](std::uint32_t c, std::size_t idx) {
    chosen[idx] = true;
    for (std::size_t d = 0; d < km.dim; ++d) km.centroids[c * km.dim + d] = points.row(idx)[d];
  };
  auto draw = [&](double total) {
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      acc += d2[i];
      pick = i;
      if (acc > target) break;
    }
    return pick;
  };

  const std::size_t first = rng.below(n);
  place(0, first);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), km.centroid(0));

  std::vector<std::vector<double>> next(trials, std::vector<double>(n));
  std::vector<double> potential(trials);
  for (std::uint32_t c = 1; c < km.k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (!(total > 0.0)) {
      // Every remaining point coincides with a centre.
      const auto idx = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
      place(c, idx);
      continue;
    }
    std::vector<std::size_t> cand(trials);
    for (auto& x : cand) x = draw(total);
    parallel_for(trials, workers, [&](std::size_t t) {
      const auto centre = points.row(cand[t]);
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double dist = 0.0;
        const auto row = points.row(i);
        for (std::size_t d = 0; d < km.dim; ++d) {
          const double diff = static_cast<double>(row[d]) - centre[d];
          dist += diff * diff;
        }
        next[t][i] = std::min(d2[i], dist);
        sum += next[t][i];
      }
      potential[t] = sum;
    });
    std::size_t best = 0;
    for (std::size_t t = 1; t < trials; ++t)
      if (potential[t] < potential[best]) best = t;
    place(c, cand[best]);
    d2.swap(next[best]);
  }
}

void update(const EmbeddingMatrix& points, const Assignment& a, KMeansResult& km) {
  const std::size_t n = points.rows();
  std::vector<double> sums(static_cast<std::size_t>(km.k) * km.dim, 0.0);
  std::vector<std::size_t> counts(km.k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = points.row(i);
    double* dst = sums.data() + static_cast<std::size_t>(a.cluster[i]) * km.dim;
    for (std::size_t d = 0; d < km.dim; ++d) dst[d] += row[d];
    ++counts[a.cluster[i]];
  }

  std::vector<bool> used(n, false);
  for (std::uint32_t c = 0; c < km.k; ++c) {
    double* centroid = km.centroids.data() + static_cast<std::size_t>(c) * km.dim;
    if (counts[c] > 0) {
      for (std::size_t d = 0; d < km.dim; ++d)
        centroid[d] = sums[static_cast<std::size_t>(c) * km.dim + d] / static_cast<double>(counts[c]);
      continue;
    }
    std::size_t far = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i]) continue;
      if (far == n || a.distance[i] > a.distance[far]) far = i;
    }
    used[far] = true;
    for (std::size_t d = 0; d < km.dim; ++d) centroid[d] = points.row(far)[d];
  }
}

std::vector<double> unit_rows(std::span<const double> data, std::size_t rows, std::size_t dim) {
  std::vector<double> out(data.begin(), data.end());
  for (std::size_t r = 0; r < rows; ++r) {
    double norm2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) norm2 += out[r * dim + d] * out[r * dim + d];
    if (norm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t d = 0; d < dim; ++d) out[r * dim + d] *= inv;
  }
  return out;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& points, const ClusterParams& params,
                    std::size_t workers) {
  const std::size_t n = points.rows();
  if (params.k == 0) throw DomainError("kmeans: k must be >= 1");
  if (params.k > n)
    throw DomainError("kmeans: k = " + std::to_string(params.k) + " exceeds " +
                      std::to_string(n) + " points");

  KMeansResult km;
  km.k = params.k;
  km.dim = points.dim;
  km.centroids.assign(static_cast<std::size_t>(km.k) * km.dim, 0.0);
  seed_plus_plus(points, km, params.seed, workers);

  Assignment a = assign(points, km, workers);
  km.sse_history.push_back(a.sse);
  for (std::uint32_t it = 0; it < params.max_iters; ++it) {
    const double prev = a.sse;
    update(points, a, km);
    a = assign(points, km, workers);
    km.sse_history.push_back(a.sse);
    ++km.iterations;
    const double improvement = prev > 0.0 ? (prev - a.sse) / prev : 0.0;
    if (improvement < params.tol) break;
  }
  km.assignments = std::move(a.cluster);
  return km;
}

std::vector<std::uint32_t> nearest_centroids(const KMeansResult& clusters,
                                             const EmbeddingMatrix& references) {
  if (references.dim != clusters.dim)
    throw DomainError("reference dimension " + std::to_string(references.dim) +
                      " differs from cluster dimension " + std::to_string(clusters.dim));
  const auto centroids = unit_rows(clusters.centroids, clusters.k, clusters.dim);
  std::vector<std::uint32_t> nearest(references.rows());
  for (std::size_t r = 0; r < references.rows(); ++r) {
    const auto ref = references.row(r);
    double norm2 = 0.0;
    for (float v : ref) norm2 += static_cast<double>(v) * v;
    if (norm2 == 0.0) throw DomainError("reference row " + std::to_string(r) + " has zero norm");
    const double inv = 1.0 / std::sqrt(norm2);

    std::uint32_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < clusters.k; ++c) {
      double sim = 0.0;
      for (std::size_t d = 0; d < clusters.dim; ++d)
        sim += centroids[c * clusters.dim + d] * ref[d] * inv;
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    nearest[r] = best;
  }
  return nearest;
}

SelectionMask in1k_cluster_mask(const EmbeddingMatrix& image_embs,
                                const EmbeddingMatrix& references,
                                const ClusterParams& params, std::size_t workers) {
  if (references.rows() == 0) throw DomainError("in1k filter needs at least one reference");
  if (references.dim != image_embs.dim)
    throw DomainError("reference dimension " + std::to_string(references.dim) +
                      " differs from image dimension " + std::to_string(image_embs.dim));
  const KMeansResult clusters = kmeans(image_embs, params, workers);
  std::vector<bool> kept(clusters.k, false);
  for (std::uint32_t c : nearest_centroids(clusters, references)) kept[c] = true;

  SelectionMask mask(image_embs.rows());
  for (std::size_t i = 0; i < clusters.assignments.size(); ++i)
    if (kept[clusters.assignments[i]]) mask.set(i);
  return mask;
}

SelectionMask in1k_cluster_mask(const PoolHandle& handle, const EmbeddingMatrix& references,
                                const ClusterParams& params, std::size_t workers) {
  return in1k_cluster_mask(handle.embeddings(kImageSource), references, params, workers);
}

}  // namespace capforge
