#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "capforge/types.hpp"

namespace capforge {

// CRC32C (Castagnoli), as stored in pool manifests.
std::uint32_t crc32c(std::string_view bytes) noexcept;
std::string crc32c_hex(std::uint32_t crc);

// Whole-file helpers. read_file throws FormatError when the file is missing.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// EMB1 sidecar: "EMB1", u32 dim, u64 rows, rows*dim f32, little-endian.
std::string encode_embeddings(const EmbeddingMatrix& m);
// `context` names the file in error messages. Size mismatches raise
// IntegrityError, a bad magic raises FormatError.
EmbeddingMatrix decode_embeddings(std::string_view bytes, std::string source,
                                  std::string_view context);

void write_embeddings_file(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embeddings_file(const std::filesystem::path& path,
                                     std::string source = {});

// SCR1 score sidecar: "SCR1", u64 count, count f32, little-endian.
std::string encode_scores(const ScoreTable& t);
ScoreTable decode_scores(std::string_view bytes, std::string source,
                         std::string_view context);

// Score sidecar file name for a source label: "{source}.scores.f32".
std::string score_file_name(std::string_view source);
void write_scores_file(const std::filesystem::path& path, const ScoreTable& t);
ScoreTable read_scores_file(const std::filesystem::path& path, std::string source = {});

}  // namespace capforge
