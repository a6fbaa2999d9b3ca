#include "capforge/report.hpp"

#include <algorithm>
#include <map>

#include "capforge/binary_io.hpp"
#include "capforge/errors.hpp"
#include "capforge/kmeans.hpp"
#include "capforge/parallel.hpp"
#include "capforge/scoring.hpp"

namespace capforge {

namespace {

constexpr std::size_t kTokenizeBlock = 2048;

std::string csv_field(const nlohmann::ordered_json& v) {
  if (v.is_null()) return {};
  if (!v.is_string()) return v.dump();
  const auto s = v.get<std::string>();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char ch : s) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  return quoted + "\"";
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  return line + "\n";
}

}  // namespace

QualityReport evaluate_curated(const PoolHandle& handle, const CuratedSet& curated,
                               ScoreTables& tables, const MetricConfig& config) {
  QualityReport row;
  row.strategy = curated.provenance.label();
  row.entry_count = curated.size();
  row.tau_used = curated.tau_used;
  row.seed = config.seed;

  // Alignment over every entry, summed in entry order.
  std::vector<std::size_t> index(curated.size());
  std::vector<std::string> sources(curated.size());
  for (std::size_t e = 0; e < curated.size(); ++e) {
    const auto& entry = curated.entries[e];
    const auto i = handle.index_of(entry.id);
    if (!i) throw DataError("curated entry references unknown record id " + std::to_string(entry.id));
    index[e] = *i;
    sources[e] = handle.caption_source(*i, entry.caption);
  }
  {
    std::vector<std::string> needed(sources.begin(), sources.end());
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    ensure_score_tables(handle, needed, tables, config.workers);
  }
  double cos_sum = 0.0, clip_sum = 0.0;
  for (std::size_t e = 0; e < curated.size(); ++e) {
    const double c = tables.at(sources[e]).scores[index[e]];
    cos_sum += c;
    clip_sum += clip_s(c);
  }
  if (!curated.entries.empty()) {
    row.mean_cosine = cos_sum / static_cast<double>(curated.size());
    row.mean_clip_s = clip_sum / static_cast<double>(curated.size());
  }

  // Text metrics over the sample.
  const std::size_t n = std::min(curated.size(), config.max_sample);
  row.sample_size = n;
  if (n == 0) return row;
  const CuratedSet sample = sample_subset(curated, n, config.seed);
  const auto captions = curated_captions(handle, sample);
  std::vector<TokenSeq> tokens(n);
  parallel_for((n + kTokenizeBlock - 1) / kTokenizeBlock, config.workers, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kTokenizeBlock);
    for (std::size_t i = b * kTokenizeBlock; i < end; ++i) tokens[i] = tokenize(captions[i]);
  });

  TrigramCounter trigrams;
  std::unordered_set<std::string> nouns;
  std::size_t words = 0;
  double grounding = 0.0;
  for (const auto& t : tokens) {
    words += t.size();
    grounding += grounding_ratio(t, config.visual_vocab);
    trigrams.add(t);
    for (const auto& tok : t)
      if (config.nouns.contains(tok)) nouns.insert(tok);
  }
  row.mean_word_count = static_cast<double>(words) / static_cast<double>(n);
  row.mean_grounding_ratio = grounding / static_cast<double>(n);
  row.unique_trigrams = trigrams.count();
  row.unique_nouns = nouns.size();
  return row;
}

std::vector<QualityReport> report_pool(const PoolHandle& handle,
                                       std::span<const StrategySpec> specs,
                                       const MetricConfig& config) {
  ScoreTables tables;
  std::map<std::tuple<std::uint32_t, std::uint32_t, double, std::uint64_t>, SelectionMask> masks;
  std::vector<QualityReport> rows;
  for (const auto& spec : specs) {
    spec.validate();
    const SelectionMask* mask = nullptr;
    if (spec.in1k_intersect) {
      if (!config.in1k_references)
        throw ConfigError("in1k_intersect", "strategy " + spec.label() + " needs reference embeddings");
      const ClusterParams params = spec.cluster_params.value_or(config.default_cluster_params);
      const auto key = std::make_tuple(params.k, params.max_iters, params.tol, params.seed);
      auto it = masks.find(key);
      if (it == masks.end())
        it = masks.emplace(key, in1k_cluster_mask(handle, *config.in1k_references, params, config.workers)).first;
      mask = &it->second;
    }
    ensure_score_tables(handle, required_score_sources(handle, spec), tables, config.workers);
    const CuratedSet curated = apply_strategy(handle, spec, tables, mask);
    rows.push_back(evaluate_curated(handle, curated, tables, config));
  }
  return rows;
}

std::vector<std::string> report_columns() {
  return {"strategy",        "entry_count",  "tau_used",    "mean_cosine",
          "mean_word_count", "mean_grounding_ratio", "unique_trigrams", "unique_nouns",
          "mean_clip_s",     "sample_size",  "seed"};
}

nlohmann::ordered_json report_row_json(const QualityReport& row) {
  nlohmann::ordered_json j;
  j["strategy"] = row.strategy;
  j["entry_count"] = row.entry_count;
  j["tau_used"] = row.tau_used ? nlohmann::ordered_json(*row.tau_used) : nlohmann::ordered_json(nullptr);
  j["mean_cosine"] = row.mean_cosine;
  j["mean_word_count"] = row.mean_word_count;
  j["mean_grounding_ratio"] = row.mean_grounding_ratio;
  j["unique_trigrams"] = row.unique_trigrams;
  j["unique_nouns"] = row.unique_nouns;
  j["mean_clip_s"] = row.mean_clip_s;
  j["sample_size"] = row.sample_size;
  j["seed"] = row.seed;
  return j;
}

std::string report_json(std::span<const QualityReport> rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) arr.push_back(report_row_json(r));
  return arr.dump(2) + "\n";
}

std::string report_csv(std::span<const QualityReport> rows) {
  std::string out = csv_line(report_columns());
  for (const auto& r : rows) {
    const auto j = report_row_json(r);
    std::vector<std::string> fields;
    for (const auto& col : report_columns()) fields.push_back(csv_field(j.at(col)));
    out += csv_line(fields);
  }
  return out;
}

std::vector<QualityReport> run_report(const std::filesystem::path& pool_path,
                                      std::span<const StrategySpec> specs,
                                      const MetricConfig& config,
                                      const std::filesystem::path& out_dir) {
  for (const auto& spec : specs) spec.validate();
  const PoolHandle handle = open_pool(pool_path);
  auto rows = report_pool(handle, specs, config);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "report.json", report_json(rows));
  write_file(out_dir / "report.csv", report_csv(rows));
  return rows;
}

std::string sweep_csv(const SweepResult& result) {
  std::vector<std::string> header{"scale"};
  for (const auto& c : report_columns()) header.push_back(c);
  std::string out = csv_line(header);
  for (const auto& r : result.rows) {
    const auto j = report_row_json(r.report);
    std::vector<std::string> fields{std::to_string(r.scale)};
    for (const auto& col : report_columns()) fields.push_back(csv_field(j.at(col)));
    out += csv_line(fields);
  }
  return out;
}

}  // namespace capforge
