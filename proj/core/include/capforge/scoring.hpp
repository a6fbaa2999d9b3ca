#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "capforge/pool.hpp"
#include "capforge/types.hpp"

namespace capforge {

// dot(u, v) / (|u| |v|), accumulated in double and clamped to [-1, 1].
// Throws DomainError on dimension mismatch or a zero-norm input.
double cosine(std::span<const float> u, std::span<const float> v);

// scores[i] = cosine(image_i, text_i) for every record. The result does not
// depend on `workers`.
ScoreTable score_pool(const PoolHandle& handle, std::string_view text_source,
                      std::size_t workers = 1);

// Reference-free caption score: 2.5 * max(cos, 0).
double clip_s(double cos_score) noexcept;

// Index of the highest score, ties to the lowest index. Throws DataError
// when empty.
std::size_t select_best_variant(std::span<const float> variant_scores);
// Same rule over the cosines between the record's image and each of its
// synthetic variants (compared at float32 precision, like score tables).
std::size_t select_best_variant(const PoolHandle& handle, std::size_t record_index);

struct RecallAtOne {
  double t2i = 0.0;
  double i2t = 0.0;
  double avg = 0.0;
};

// Exhaustive cosine retrieval where row i of each matrix is the true pair.
// Nearest-neighbour ties resolve to the lowest index.
RecallAtOne recall_at_1(const EmbeddingMatrix& image_embs, const EmbeddingMatrix& text_embs);

// Maps a user-facing synthetic source selector to an embedding source
// label: either a full "syn.{src}.{temp}" label, or a bare captioner name
// present at exactly one temperature. Throws DataError when nothing matches
// and ConfigError when a bare name is ambiguous.
std::string resolve_syn_source(const PoolHandle& handle, std::string_view selector);
std::string resolve_syn_source(std::span<const std::string> embedding_sources,
                               std::string_view selector);

// Index of the first variant of `r` whose source label equals `label`.
std::optional<std::uint32_t> variant_index_for(const Record& r, std::string_view label);

}  // namespace capforge
