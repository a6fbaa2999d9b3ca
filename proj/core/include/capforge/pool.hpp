#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "capforge/strategy.hpp"
#include "capforge/types.hpp"

namespace capforge {

inline constexpr int kPoolFormatVersion = 1;

struct PoolManifest {
  int format_version = kPoolFormatVersion;
  std::uint64_t num_records = 0;
  std::uint64_t num_shards = 0;
  std::uint64_t records_per_shard = 0;
  std::uint32_t embedding_dim = 0;
  std::vector<std::string> embedding_sources;
  std::optional<std::uint64_t> generator_seed;
  std::map<std::string, std::string> checksums;  // file name -> hex CRC32C

  bool operator==(const PoolManifest&) const = default;
};

nlohmann::json to_json(const PoolManifest& m);
PoolManifest manifest_from_json(const nlohmann::json& j);

// Half-open record index range [begin, end) of one shard.
struct ShardRange {
  std::uint64_t index = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t size() const noexcept { return end - begin; }
  bool operator==(const ShardRange&) const = default;
};

// Shard layout is a pure function of the record count and shard capacity.
std::vector<ShardRange> shard_layout(std::uint64_t num_records, std::uint64_t records_per_shard);

std::string shard_records_file(std::uint64_t shard);                           // shard-00000.jsonl
std::string shard_embedding_file(std::uint64_t shard, std::string_view source);  // shard-00000.image.f32

// Record <-> JSONL line.
std::string encode_record(const Record& r);
Record decode_record(std::string_view line);

// Writes the files of one shard and returns their checksums keyed by file
// name. `embeddings` holds one matrix per source, each with one row per record.
std::map<std::string, std::string> write_shard(
    const std::filesystem::path& dir, std::uint64_t shard, std::span<const Record> records,
    const std::vector<EmbeddingMatrix>& embeddings);

void write_manifest(const std::filesystem::path& dir, const PoolManifest& m);

// Writes a complete pool. `embeddings` must contain an "image" matrix and
// every matrix must have records.size() rows and a common dimension.
PoolManifest write_pool(std::span<const Record> records,
                        const std::vector<EmbeddingMatrix>& embeddings,
                        const std::filesystem::path& out_path,
                        std::uint64_t records_per_shard,
                        std::optional<std::uint64_t> generator_seed = std::nullopt);

// Read-only, fully loaded view of a pool directory. Immutable after
// construction and safe to share between threads.
class PoolHandle {
 public:
  const PoolManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  std::size_t size() const noexcept { return records_.size(); }
  std::span<const Record> records() const noexcept { return records_; }
  const Record& record(std::size_t index) const { return records_.at(index); }
  std::optional<std::size_t> index_of(RecordId id) const;

  const std::vector<ShardRange>& shards() const noexcept { return shards_; }

  bool has_source(std::string_view source) const;
  // Throws DataError when the source is absent.
  const EmbeddingMatrix& embeddings(std::string_view source) const;
  std::vector<std::string> sources() const;

  // Caption text for an entry's caption choice.
  const std::string& caption_text(std::size_t index, CaptionChoice choice) const;
  // Embedding source label holding the text embedding for a caption choice.
  std::string caption_source(std::size_t index, CaptionChoice choice) const;

 private:
  friend PoolHandle open_pool(const std::filesystem::path& path);

  std::filesystem::path path_;
  PoolManifest manifest_;
  std::vector<Record> records_;
  std::vector<ShardRange> shards_;
  std::map<std::string, EmbeddingMatrix, std::less<>> embeddings_;
  std::unordered_map<RecordId, std::size_t> id_index_;
};

// Throws FormatError for a missing or corrupt manifest / unsupported
// version, IntegrityError for checksum or size mismatches.
PoolHandle open_pool(const std::filesystem::path& path);

struct ValidationFinding {
  enum class Kind { kDuplicateId, kDimensionMismatch, kNonFinite, kZeroNorm, kShardInconsistency };

  Kind kind;
  std::optional<std::size_t> record_index;
  std::string source;
  std::string message;
};

std::string_view to_string(ValidationFinding::Kind kind);

struct ValidationReport {
  std::vector<ValidationFinding> findings;

  bool clean() const noexcept { return findings.empty(); }
  std::size_t count(ValidationFinding::Kind kind) const;
};

ValidationReport validate_pool(const PoolHandle& handle);

// Writes the curated entries as a new pool: chosen caption becomes the raw
// caption, its text embedding becomes source "raw", ids are reassigned
// sequentially and the source id is kept as provenance.
PoolManifest materialize(const PoolHandle& handle, const CuratedSet& curated,
                         const std::filesystem::path& out_path,
                         std::optional<std::uint64_t> records_per_shard = std::nullopt);

}  // namespace capforge
