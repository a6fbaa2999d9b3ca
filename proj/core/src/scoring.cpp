#include "capforge/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

#include "capforge/errors.hpp"
#include "capforge/parallel.hpp"

namespace capforge {

namespace {

constexpr std::size_t kScoreBlock = 4096;

bool is_temperature_suffix(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || s.size() - dot != 3) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != dot && !std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

std::vector<double> normalized_rows(const EmbeddingMatrix& m) {
  std::vector<double> out(m.data.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double norm2 = 0.0;
    for (float v : m.row(i)) norm2 += static_cast<double>(v) * v;
    if (norm2 == 0.0)
      throw DomainError(m.source + " row " + std::to_string(i) + " has zero norm");
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t d = 0; d < m.dim; ++d) out[i * m.dim + d] = m.data[i * m.dim + d] * inv;
  }
  return out;
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw DomainError("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " +
                      std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    nu += a * a;
    nv += b * b;
  }
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine: zero-norm input");
  return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

ScoreTable score_pool(const PoolHandle& handle, std::string_view text_source,
                      std::size_t workers) {
  if (!handle.has_source(kImageSource)) throw DataError("pool has no image embeddings");
  if (!handle.has_source(text_source))
    throw DataError("pool has no embedding source '" + std::string(text_source) + "'");
  const EmbeddingMatrix& image = handle.embeddings(kImageSource);
  const EmbeddingMatrix& text = handle.embeddings(text_source);
  if (image.dim != text.dim) throw DataError("image and text dimensions differ");

  const std::size_t n = handle.size();
  ScoreTable table{std::string(text_source), std::vector<float>(n)};
  const std::size_t blocks = (n + kScoreBlock - 1) / kScoreBlock;
  parallel_for(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kScoreBlock);
    for (std::size_t i = b * kScoreBlock; i < end; ++i)
      table.scores[i] = static_cast<float>(cosine(image.row(i), text.row(i)));
  });
  return table;
}

double clip_s(double cos_score) noexcept { return 2.5 * std::max(cos_score, 0.0); }

std::size_t select_best_variant(std::span<const float> variant_scores) {
  if (variant_scores.empty()) throw DataError("record has no synthetic variants");
  std::size_t best = 0;
  for (std::size_t j = 1; j < variant_scores.size(); ++j)
    if (variant_scores[j] > variant_scores[best]) best = j;
  return best;
}

std::size_t select_best_variant(const PoolHandle& handle, std::size_t record_index) {
  const Record& r = handle.record(record_index);
  if (r.synthetic_variants.empty())
    throw DataError("record " + std::to_string(r.id) + " has no synthetic variants");
  const auto image = handle.embeddings(kImageSource).row(record_index);
  std::vector<float> scores;
  scores.reserve(r.synthetic_variants.size());
  for (const auto& v : r.synthetic_variants) {
    const auto& text = handle.embeddings(variant_source_label(v));
    scores.push_back(static_cast<float>(cosine(image, text.row(record_index))));
  }
  return select_best_variant(scores);
}

RecallAtOne recall_at_1(const EmbeddingMatrix& image_embs, const EmbeddingMatrix& text_embs) {
  const std::size_t n = image_embs.rows();
  if (n == 0 || text_embs.rows() == 0) throw DomainError("recall_at_1: empty input");
  if (text_embs.rows() != n) throw DomainError("recall_at_1: row counts differ");
  if (image_embs.dim != text_embs.dim) throw DomainError("recall_at_1: dimensions differ");

  const std::size_t d = image_embs.dim;
  const auto img = normalized_rows(image_embs);
  const auto txt = normalized_rows(text_embs);

  // sim[i][j] = <image_i, text_j>
  std::vector<double> sim(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += img[i * d + k] * txt[j * d + k];
      sim[i * n + j] = dot;
    }

  std::size_t i2t_hits = 0, t2i_hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (sim[i * n + j] > sim[i * n + best]) best = j;
    i2t_hits += best == i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (sim[i * n + j] > sim[best * n + j]) best = i;
    t2i_hits += best == j;
  }
  RecallAtOne r;
  r.i2t = static_cast<double>(i2t_hits) / static_cast<double>(n);
  r.t2i = static_cast<double>(t2i_hits) / static_cast<double>(n);
  r.avg = 0.5 * (r.i2t + r.t2i);
  return r;
}

std::string resolve_syn_source(std::span<const std::string> embedding_sources,
                               std::string_view selector) {
  std::vector<std::string> matches;
  const std::string prefix = "syn." + std::string(selector) + ".";
  for (const auto& s : embedding_sources) {
    if (s == selector && s.starts_with("syn.")) return s;
    if (s.starts_with(prefix) && is_temperature_suffix(std::string_view(s).substr(prefix.size())))
      matches.push_back(s);
  }
  if (matches.empty())
    throw DataError("no synthetic caption source matches '" + std::string(selector) + "'");
  if (matches.size() > 1) {
    std::string list;
    for (const auto& m : matches) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("syn_source", "'" + std::string(selector) +
                                        "' is ambiguous; use one of: " + list);
  }
  return matches.front();
}

std::string resolve_syn_source(const PoolHandle& handle, std::string_view selector) {
  return resolve_syn_source(handle.manifest().embedding_sources, selector);
}

std::optional<std::uint32_t> variant_index_for(const Record& r, std::string_view label) {
  for (std::size_t j = 0; j < r.synthetic_variants.size(); ++j)
    if (variant_source_label(r.synthetic_variants[j]) == label) return static_cast<std::uint32_t>(j);
  return std::nullopt;
}

}  // namespace capforge
