#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "capforge/pool.hpp"
#include "capforge/strategy.hpp"
#include "capforge/types.hpp"

namespace capforge {

struct TopSelection {
  SelectionMask mask;
  // Minimum selected score (top_fraction) or the given threshold; absent
  // when a top_fraction selects nothing.
  std::optional<double> tau;
};

// floor(p * n / 100) computed exactly; p must lie in (0, 100].
std::size_t top_count(double p, std::size_t n);

// Selects exactly floor(p * N / 100) records with the highest scores; ties
// go to the lower id. `ids` must be unique and parallel to `scores`.
// Throws DomainError unless 0 < p <= 100.
TopSelection top_fraction(std::span<const float> scores, std::span<const RecordId> ids, double p);
// Record ids are taken to be the table indices.
TopSelection top_fraction(const ScoreTable& scores, double p);

// {i : scores[i] >= tau}
SelectionMask threshold_filter(std::span<const float> scores, double tau);
SelectionMask threshold_filter(const ScoreTable& scores, double tau);

TopSelection select_top(std::span<const float> scores, std::span<const RecordId> ids,
                        const FilterSpec& filter);

// Everything apply_strategy needs, decoupled from on-disk pools.
struct CurationInputs {
  std::vector<RecordId> ids;
  std::optional<ScoreTable> raw_scores;
  std::optional<ScoreTable> syn_scores;
  // Per record: index of the variant produced by the selected synthetic source.
  std::vector<std::optional<std::uint32_t>> syn_variant;
  // Per record: select_best_variant choice, for syn_best_variant_all.
  std::vector<std::optional<std::uint32_t>> best_variant;
  std::optional<SelectionMask> in1k_mask;
};

CuratedSet apply_strategy(const StrategySpec& spec, const CurationInputs& inputs);

// Score tables keyed by embedding source label.
using ScoreTables = std::map<std::string, ScoreTable, std::less<>>;

// Source labels whose score tables apply_strategy needs for `spec`.
std::vector<std::string> required_score_sources(const PoolHandle& handle, const StrategySpec& spec);

// Computes (and adds to `tables`) any missing table among `sources`.
void ensure_score_tables(const PoolHandle& handle, std::span<const std::string> sources,
                         ScoreTables& tables, std::size_t workers = 1);

// Throws DataError when a required score table or the in1k mask is missing.
CuratedSet apply_strategy(const PoolHandle& handle, const StrategySpec& spec,
                          const ScoreTables& tables,
                          const SelectionMask* in1k_mask = nullptr);

}  // namespace capforge
