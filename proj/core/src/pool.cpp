#include "capforge/pool.hpp"

#include <algorithm>
#include <cstdio>

#include "capforge/binary_io.hpp"
#include "capforge/errors.hpp"

namespace capforge {

std::string variant_source_label(std::string_view source_name, double temperature) {
  char temp[32];
  std::snprintf(temp, sizeof(temp), "%.2f", temperature);
  return "syn." + std::string(source_name) + "." + temp;
}

std::string variant_source_label(const CaptionVariant& v) {
  return variant_source_label(v.source_name, v.temperature);
}

nlohmann::json to_json(const PoolManifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["num_records"] = m.num_records;
  j["num_shards"] = m.num_shards;
  j["records_per_shard"] = m.records_per_shard;
  j["embedding_dim"] = m.embedding_dim;
  j["embedding_sources"] = m.embedding_sources;
  if (m.generator_seed) j["generator_seed"] = *m.generator_seed;
  j["checksums"] = m.checksums;
  return j;
}

PoolManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("manifest must be a JSON object");
  PoolManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kPoolFormatVersion)
      throw FormatError("unsupported manifest format_version " +
                        std::to_string(m.format_version));
    m.num_records = j.at("num_records").get<std::uint64_t>();
    m.num_shards = j.at("num_shards").get<std::uint64_t>();
    m.records_per_shard = j.at("records_per_shard").get<std::uint64_t>();
    m.embedding_dim = j.at("embedding_dim").get<std::uint32_t>();
    m.embedding_sources = j.at("embedding_sources").get<std::vector<std::string>>();
    if (j.contains("generator_seed") && !j.at("generator_seed").is_null())
      m.generator_seed = j.at("generator_seed").get<std::uint64_t>();
    m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt manifest: ") + e.what());
  }
  if (m.records_per_shard == 0 && m.num_records > 0)
    throw FormatError("corrupt manifest: records_per_shard is 0");
  if (std::find(m.embedding_sources.begin(), m.embedding_sources.end(), kImageSource) ==
      m.embedding_sources.end())
    throw FormatError("corrupt manifest: embedding_sources lacks \"image\"");
  return m;
}

std::vector<ShardRange> shard_layout(std::uint64_t num_records,
                                     std::uint64_t records_per_shard) {
  std::vector<ShardRange> shards;
  if (num_records == 0) return shards;
  const std::uint64_t n = (num_records + records_per_shard - 1) / records_per_shard;
  shards.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    const std::uint64_t begin = k * records_per_shard;
    shards.push_back({k, begin, std::min(num_records, begin + records_per_shard)});
  }
  return shards;
}

std::string shard_records_file(std::uint64_t shard) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%05llu.jsonl", static_cast<unsigned long long>(shard));
  return buf;
}

std::string shard_embedding_file(std::uint64_t shard, std::string_view source) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "shard-%05llu.", static_cast<unsigned long long>(shard));
  return std::string(buf) + std::string(source) + ".f32";
}

std::string encode_record(const Record& r) {
  nlohmann::json j;
  j["id"] = r.id;
  if (r.provenance) j["prov"] = *r.provenance;
  j["raw"] = r.raw_caption;
  j["syn"] = nlohmann::json::array();
  for (const auto& v : r.synthetic_variants)
    j["syn"].push_back({{"src", v.source_name}, {"temp", v.temperature}, {"text", v.text}});
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("record " + std::to_string(r.id) + ": " + e.what());
  }
}

Record decode_record(std::string_view line) {
  Record r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.id = j.at("id").get<RecordId>();
    if (j.contains("prov") && !j.at("prov").is_null()) r.provenance = j.at("prov").get<RecordId>();
    r.raw_caption = j.at("raw").get<std::string>();
    for (const auto& v : j.at("syn")) {
      r.synthetic_variants.push_back({v.at("src").get<std::string>(), v.at("temp").get<double>(),
                                      v.at("text").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt record line: ") + e.what());
  }
  return r;
}

std::optional<std::size_t> PoolHandle::index_of(RecordId id) const {
  const auto it = id_index_.find(id);
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

bool PoolHandle::has_source(std::string_view source) const {
  return embeddings_.find(source) != embeddings_.end();
}

const EmbeddingMatrix& PoolHandle::embeddings(std::string_view source) const {
  const auto it = embeddings_.find(source);
  if (it == embeddings_.end())
    throw DataError("pool has no embedding source '" + std::string(source) + "'");
  return it->second;
}

std::vector<std::string> PoolHandle::sources() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : embeddings_) out.push_back(name);
  return out;
}

const std::string& PoolHandle::caption_text(std::size_t index, CaptionChoice choice) const {
  const Record& r = record(index);
  if (choice.is_raw()) return r.raw_caption;
  if (choice.variant_index() >= r.synthetic_variants.size())
    throw DataError("record " + std::to_string(r.id) + " has no variant " +
                    std::to_string(choice.variant_index()));
  return r.synthetic_variants[choice.variant_index()].text;
}

std::string PoolHandle::caption_source(std::size_t index, CaptionChoice choice) const {
  const Record& r = record(index);
  if (choice.is_raw()) return std::string(kRawSource);
  if (choice.variant_index() >= r.synthetic_variants.size())
    throw DataError("record " + std::to_string(r.id) + " has no variant " +
                    std::to_string(choice.variant_index()));
  return variant_source_label(r.synthetic_variants[choice.variant_index()]);
}

namespace {

std::string read_checked(const std::filesystem::path& dir, const PoolManifest& m,
                         const std::string& file, const std::string& what) {
  const auto it = m.checksums.find(file);
  if (it == m.checksums.end())
    throw IntegrityError(what + ": no checksum recorded for " + file);
  std::string bytes;
  try {
    bytes = read_file(dir / file);
  } catch (const FormatError&) {
    throw IntegrityError(what + ": missing file " + file);
  }
  if (crc32c_hex(crc32c(bytes)) != it->second)
    throw IntegrityError(what + ": checksum mismatch in " + file);
  return bytes;
}

std::string shard_tag(std::uint64_t shard) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05llu", static_cast<unsigned long long>(shard));
  return buf;
}

}  // namespace

PoolHandle open_pool(const std::filesystem::path& path) {
  PoolHandle h;
  h.path_ = path;

  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(read_file(path / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corrupt manifest: " + std::string(e.what()));
  }
  h.manifest_ = manifest_from_json(mj);
  const PoolManifest& m = h.manifest_;

  for (const auto& source : m.embedding_sources)
    h.embeddings_.emplace(source, EmbeddingMatrix(source, m.embedding_dim));

  h.records_.reserve(m.num_records);
  for (std::uint64_t k = 0; k < m.num_shards; ++k) {
    const std::string tag = "shard " + shard_tag(k);
    const std::string bytes = read_checked(path, m, shard_records_file(k), tag);
    const std::uint64_t begin = h.records_.size();
    std::size_t pos = 0;
    while (pos < bytes.size()) {
      std::size_t nl = bytes.find('\n', pos);
      if (nl == std::string::npos) nl = bytes.size();
      if (nl > pos) h.records_.push_back(decode_record(std::string_view(bytes).substr(pos, nl - pos)));
      pos = nl + 1;
    }
    const std::uint64_t rows = h.records_.size() - begin;
    h.shards_.push_back({k, begin, begin + rows});

    for (const auto& source : m.embedding_sources) {
      const std::string what = tag + " source " + source;
      const std::string file = shard_embedding_file(k, source);
      EmbeddingMatrix part = decode_embeddings(read_checked(path, m, file, what), source, what);
      if (part.rows() != rows && !(rows == 0 && part.data.empty()))
        throw IntegrityError(what + ": " + std::to_string(part.rows()) + " rows for " +
                             std::to_string(rows) + " records");
      EmbeddingMatrix& whole = h.embeddings_.at(source);
      if (k == 0) {
        whole.dim = part.dim;
      } else if (part.dim != whole.dim) {
        throw FormatError(what + ": dimension " + std::to_string(part.dim) +
                          " differs from earlier shards (" + std::to_string(whole.dim) + ")");
      }
      whole.data.insert(whole.data.end(), part.data.begin(), part.data.end());
    }
  }

  h.id_index_.reserve(h.records_.size());
  for (std::size_t i = 0; i < h.records_.size(); ++i) h.id_index_.emplace(h.records_[i].id, i);
  return h;
}

}  // namespace capforge
