#include <cmath>
#include <set>

#include "capforge/binary_io.hpp"
#include "capforge/errors.hpp"
#include "capforge/pool.hpp"

namespace capforge {

std::map<std::string, std::string> write_shard(const std::filesystem::path& dir,
                                               std::uint64_t shard,
                                               std::span<const Record> records,
                                               const std::vector<EmbeddingMatrix>& embeddings) {
  std::map<std::string, std::string> checksums;

  std::string lines;
  for (const auto& r : records) {
    lines += encode_record(r);
    lines += '\n';
  }
  const std::string records_file = shard_records_file(shard);
  write_file(dir / records_file, lines);
  checksums[records_file] = crc32c_hex(crc32c(lines));

  for (const auto& m : embeddings) {
    if (m.rows() != records.size())
      throw DataError("shard " + std::to_string(shard) + " source " + m.source + ": " +
                      std::to_string(m.rows()) + " rows for " + std::to_string(records.size()) +
                      " records");
    const std::string bytes = encode_embeddings(m);
    const std::string file = shard_embedding_file(shard, m.source);
    write_file(dir / file, bytes);
    checksums[file] = crc32c_hex(crc32c(bytes));
  }
  return checksums;
}

void write_manifest(const std::filesystem::path& dir, const PoolManifest& m) {
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

PoolManifest write_pool(std::span<const Record> records,
                        const std::vector<EmbeddingMatrix>& embeddings,
                        const std::filesystem::path& out_path,
                        std::uint64_t records_per_shard,
                        std::optional<std::uint64_t> generator_seed) {
  if (records_per_shard == 0) throw DataError("records_per_shard must be >= 1");

  std::set<std::string, std::less<>> seen;
  const EmbeddingMatrix* image = nullptr;
  for (const auto& m : embeddings) {
    if (!seen.insert(m.source).second) throw DataError("duplicate embedding source " + m.source);
    if (m.source == kImageSource) image = &m;
  }
  if (image == nullptr) throw DataError("embedding source \"image\" is required");

  const std::uint32_t dim = image->dim;
  for (const auto& m : embeddings) {
    if (m.rows() != records.size())
      throw DataError("length mismatch: source " + m.source + " has " + std::to_string(m.rows()) +
                      " vectors for " + std::to_string(records.size()) + " records");
    if (m.dim != dim)
      throw DataError("source " + m.source + " has dimension " + std::to_string(m.dim) +
                      ", expected " + std::to_string(dim));
    for (std::size_t i = 0; i < m.data.size(); ++i) {
      if (!std::isfinite(m.data[i]))
        throw DataError("non-finite value in source " + m.source + " row " +
                        std::to_string(i / dim));
    }
  }

  std::filesystem::create_directories(out_path);

  PoolManifest manifest;
  manifest.num_records = records.size();
  manifest.records_per_shard = records_per_shard;
  manifest.embedding_dim = dim;
  manifest.generator_seed = generator_seed;
  for (const auto& m : embeddings) manifest.embedding_sources.push_back(m.source);

  const auto layout = shard_layout(records.size(), records_per_shard);
  manifest.num_shards = layout.size();
  for (const auto& shard : layout) {
    std::vector<EmbeddingMatrix> parts;
    parts.reserve(embeddings.size());
    for (const auto& m : embeddings) {
      EmbeddingMatrix part(m.source, dim);
      part.data.assign(m.data.begin() + static_cast<std::ptrdiff_t>(shard.begin * dim),
                       m.data.begin() + static_cast<std::ptrdiff_t>(shard.end * dim));
      parts.push_back(std::move(part));
    }
    auto sums = write_shard(out_path, shard.index,
                            records.subspan(shard.begin, shard.size()), parts);
    manifest.checksums.merge(sums);
  }
  write_manifest(out_path, manifest);
  return manifest;
}

}  // namespace capforge
