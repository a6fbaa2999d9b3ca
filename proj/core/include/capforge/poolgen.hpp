#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capforge/pool.hpp"

namespace capforge {

struct SynSourceConfig {
  std::string source_name;
  double temperature = 0.75;
  // Scales the vocabulary richness of generated captions; 1 is the full
  // template/adjective/preposition inventory.
  double diversity_factor = 1.0;

  bool operator==(const SynSourceConfig&) const = default;
};

inline constexpr std::uint64_t kMaxGeneratedRecords = 20'000'000;

struct GenConfig {
  std::uint64_t num_records = 10'000;
  std::uint32_t embedding_dim = 64;
  std::uint64_t records_per_shard = 10'000;
  std::uint64_t seed = 0;
  std::uint32_t concept_vocab_size = 1'000;
  double zipf_exponent = 1.1;
  double raw_alignment_mean = 0.208;
  double raw_alignment_sd = 0.05;
  double syn_alignment_mean = 0.251;
  double syn_alignment_sd = 0.05;
  double raw_noise_rate = 0.1;
  std::vector<SynSourceConfig> syn_sources{{"blip2", 0.75, 0.5}};

  // Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const GenConfig&) const = default;
};

nlohmann::json to_json(const GenConfig& c);
// Missing fields keep their defaults; unknown fields raise ConfigError.
GenConfig gen_config_from_json(const nlohmann::json& j);

// Fixed boilerplate captions standing in for crawled non-descriptive text.
std::span<const std::string_view> boilerplate_captions();

// Deterministic unit vector for a concept set: the normalized sum of one
// seeded Gaussian direction per distinct concept. Order and duplicates in
// `concept_ids` do not matter. Throws DomainError for dim < 2 or an empty set.
std::vector<double> embed_concept(std::span<const std::uint32_t> concept_ids, std::uint32_t dim,
                                  std::uint64_t seed);

// alpha * e_img + sqrt(1 - alpha^2) * n, where n is a seeded unit vector
// orthogonal to e_img; cosine(e_img, result) == alpha. Throws DomainError
// when |alpha| > 1 or e_img is not unit norm.
std::vector<double> attach_alignment(std::span<const double> e_img, double alpha,
                                     std::uint64_t noise_seed);

// Token for a concept id: a bundled noun for low ids, a pronounceable
// pseudo-word beyond. Distinct ids map to distinct tokens.
std::string concept_word(std::uint32_t concept_id);
std::vector<std::string> concept_words(const GenConfig& config);

// Latent draws behind one generated record.
struct RecordTruth {
  std::vector<std::uint32_t> concepts;  // sorted, distinct
  bool boilerplate = false;
  double raw_alpha = 0.0;
  std::vector<double> syn_alpha;        // one per syn source
};

RecordTruth record_truth(const GenConfig& config, std::uint64_t index);

struct GeneratedRecord {
  Record record;
  RecordTruth truth;
  std::vector<float> image;
  std::vector<float> raw;
  std::vector<std::vector<float>> syn;  // one per syn source
};

// Record `index` of the pool described by `config`; a pure function of both.
GeneratedRecord generate_record(const GenConfig& config, std::uint64_t index);

// Embedding source labels a generated pool carries, in manifest order.
std::vector<std::string> generated_sources(const GenConfig& config);

// Writes the pool. Shards are produced concurrently on `workers` threads;
// the bytes written depend only on `config`.
PoolManifest generate_pool(const GenConfig& config, const std::filesystem::path& out_path,
                           std::size_t workers = 1);

// Reference image embeddings for the in1k cluster filter: one
// single-concept vector for each of the `count` most frequent concepts.
EmbeddingMatrix reference_embeddings(const GenConfig& config, std::size_t count);

}  // namespace capforge
