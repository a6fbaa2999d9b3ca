#include <algorithm>

#include "capforge/errors.hpp"
#include "capforge/pool.hpp"

namespace capforge {

PoolManifest materialize(const PoolHandle& handle, const CuratedSet& curated,
                         const std::filesystem::path& out_path,
                         std::optional<std::uint64_t> records_per_shard) {
  std::vector<CuratedEntry> entries = curated.entries;
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());

  const EmbeddingMatrix& image = handle.embeddings(kImageSource);
  const std::uint32_t dim = image.dim;

  std::vector<Record> records;
  records.reserve(entries.size());
  EmbeddingMatrix out_image(std::string(kImageSource), dim);
  EmbeddingMatrix out_text(std::string(kRawSource), dim);
  out_image.data.reserve(entries.size() * dim);
  out_text.data.reserve(entries.size() * dim);

  for (const auto& e : entries) {
    const auto index = handle.index_of(e.id);
    if (!index) throw DataError("curated entry references unknown record id " + std::to_string(e.id));
    const std::string source = handle.caption_source(*index, e.caption);
    if (!handle.has_source(source))
      throw DataError("record " + std::to_string(e.id) + ": no embeddings for caption source " + source);

    Record r;
    r.id = records.size();
    r.provenance = e.id;
    r.raw_caption = handle.caption_text(*index, e.caption);
    records.push_back(std::move(r));
    out_image.append_row(image.row(*index));
    out_text.append_row(handle.embeddings(source).row(*index));
  }

  std::uint64_t rps = records_per_shard.value_or(handle.manifest().records_per_shard);
  if (rps == 0) rps = 1;
  return write_pool(records, {std::move(out_image), std::move(out_text)}, out_path, rps);
}

}  // namespace capforge
