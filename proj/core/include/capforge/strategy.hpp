#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "capforge/types.hpp"

namespace capforge {

// How a "top" set is selected: the x% highest-scoring records, or every
// record scoring at least tau.
struct FilterSpec {
  enum class Kind { kTopFraction, kThreshold };

  Kind kind = Kind::kTopFraction;
  double p = 0.0;    // percentage in (0, 100], top_fraction only
  double tau = 0.0;  // threshold only

  static FilterSpec top_fraction(double percent) { return {Kind::kTopFraction, percent, 0.0}; }
  static FilterSpec threshold(double t) { return {Kind::kThreshold, 0.0, t}; }

  bool operator==(const FilterSpec&) const = default;
};

struct ClusterParams {
  std::uint32_t k = 64;
  std::uint32_t max_iters = 50;
  double tol = 1e-4;
  std::uint64_t seed = 0;

  bool operator==(const ClusterParams&) const = default;
};

enum class StrategyName {
  kRawAll,
  kSynAll,
  kSynBestVariantAll,
  kRawTop,
  kSynTop,
  kSynOnRawTop,
  kRawTopPlusSynRest,
  kRawTopPlusSynRestFiltered,
  kSynTopPlusRawRestFiltered,
  kConcatTopPlusSynRestFiltered,
  kUnionTopRawTopSyn,
};

std::string_view to_string(StrategyName name);
// Throws ConfigError naming "name" for unknown strategies.
StrategyName parse_strategy_name(std::string_view name);
const std::vector<StrategyName>& all_strategy_names();
// True for strategies that select a "top" set and therefore need a filter.
bool needs_filter(StrategyName name);
// True for strategies that place synthetic captions.
bool needs_syn_source(StrategyName name);

struct StrategySpec {
  StrategyName name = StrategyName::kRawAll;
  std::optional<FilterSpec> filter;
  std::string syn_source;
  bool in1k_intersect = false;
  std::optional<ClusterParams> cluster_params;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // "raw_top(30)", "syn_top(tau>=0.28)+in1k", ...
  std::string label() const;

  bool operator==(const StrategySpec&) const = default;
};

nlohmann::json to_json(const StrategySpec& spec);
// Strict: unknown fields and wrong types raise ConfigError with the field named.
StrategySpec strategy_from_json(const nlohmann::json& j);
// Accepts either a JSON array of specs or {"strategies": [...]}.
std::vector<StrategySpec> strategies_from_json(const nlohmann::json& j);

// The materialized (record, caption) selection a strategy produces.
struct CuratedSet {
  std::vector<CuratedEntry> entries;  // sorted ascending, no exact duplicates
  std::optional<double> tau_used;
  // Second derived threshold, set only by union_top_raw_top_syn (synthetic side).
  std::optional<double> tau_syn_used;
  StrategySpec provenance;

  std::size_t size() const noexcept { return entries.size(); }
  // Sorts entries and collapses exact duplicates.
  void normalize();
};

// Default output name "curated.{strategy}.jsonl".
std::string curated_file_name(const StrategySpec& spec);
// Header line {"count", "spec", "tau_used", ...} followed by one
// {"id": int, "cap": "raw"|int} object per entry.
void write_curated(const std::filesystem::path& path, const CuratedSet& set);
CuratedSet read_curated(const std::filesystem::path& path);

}  // namespace capforge
