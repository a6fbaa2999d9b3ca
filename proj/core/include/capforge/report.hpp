#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capforge/curation.hpp"
#include "capforge/poolgen.hpp"
#include "capforge/text_metrics.hpp"

namespace capforge {

inline constexpr std::size_t kDefaultMetricSample = 100'000;

struct MetricConfig {
  Lexicon visual_vocab = bundled_visual_vocab();
  Lexicon nouns = bundled_nouns();
  // Text metrics run on a seeded sample of min(|set|, max_sample) entries.
  std::size_t max_sample = kDefaultMetricSample;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Needed only by strategies with in1k_intersect.
  std::optional<EmbeddingMatrix> in1k_references;
  ClusterParams default_cluster_params;
};

// One row of the noise-vs-diversity table. Alignment means cover every
// entry; text metrics cover the sample.
struct QualityReport {
  std::string strategy;
  std::size_t entry_count = 0;
  std::optional<double> tau_used;
  double mean_cosine = 0.0;
  double mean_word_count = 0.0;
  double mean_grounding_ratio = 0.0;
  std::size_t unique_trigrams = 0;
  std::size_t unique_nouns = 0;
  double mean_clip_s = 0.0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;

  bool operator==(const QualityReport&) const = default;
};

QualityReport evaluate_curated(const PoolHandle& handle, const CuratedSet& curated,
                               ScoreTables& tables, const MetricConfig& config);

// Curates and evaluates every spec against an open pool; no files written.
std::vector<QualityReport> report_pool(const PoolHandle& handle,
                                       std::span<const StrategySpec> specs,
                                       const MetricConfig& config);

// report_pool plus `report.json` and `report.csv` in out_dir.
std::vector<QualityReport> run_report(const std::filesystem::path& pool_path,
                                      std::span<const StrategySpec> specs,
                                      const MetricConfig& config,
                                      const std::filesystem::path& out_dir);

std::vector<std::string> report_columns();
nlohmann::ordered_json report_row_json(const QualityReport& row);
std::string report_json(std::span<const QualityReport> rows);
// ',' separator, '.' decimal point, LF endings, header row. Numbers are
// rendered exactly as in report_json.
std::string report_csv(std::span<const QualityReport> rows);

struct SweepRow {
  std::uint64_t scale = 0;
  QualityReport report;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

// Generates one pool per scale from `config_template` (same seed, so
// smaller pools are prefixes of larger ones) under work_dir/scale-{N},
// evaluates every spec and writes work_dir/sweep.csv. Throws ConfigError
// when scales are not positive and strictly increasing or exceed the
// generator limit.
SweepResult run_sweep(const GenConfig& config_template, std::span<const std::uint64_t> scales,
                      std::span<const StrategySpec> specs, const MetricConfig& config,
                      const std::filesystem::path& work_dir);

std::string sweep_csv(const SweepResult& result);

}  // namespace capforge
