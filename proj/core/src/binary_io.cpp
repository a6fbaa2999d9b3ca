#include "capforge/binary_io.hpp"

#include <bit>
#include <boost/crc.hpp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "capforge/errors.hpp"

namespace capforge {

namespace {

using Crc32c = boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true>;

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t offset) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, bytes.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

void put_floats(std::string& out, const std::vector<float>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(float));
  } else {
    for (float v : values) put_le(out, v);
  }
}

void get_floats(std::string_view bytes, std::size_t offset, std::vector<float>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(values.data(), bytes.data() + offset, values.size() * sizeof(float));
  } else {
    for (std::size_t i = 0; i < values.size(); ++i)
      values[i] = get_le<float>(bytes, offset + i * sizeof(float));
  }
}

constexpr std::string_view kEmbMagic = "EMB1";
constexpr std::string_view kScoreMagic = "SCR1";
constexpr std::size_t kEmbHeader = 4 + 4 + 8;
constexpr std::size_t kScoreHeader = 4 + 8;

}  // namespace

std::uint32_t crc32c(std::string_view bytes) noexcept {
  Crc32c crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::string crc32c_hex(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

std::string encode_embeddings(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(kEmbHeader + m.data.size() * sizeof(float));
  out.append(kEmbMagic);
  put_le<std::uint32_t>(out, m.dim);
  put_le<std::uint64_t>(out, m.rows());
  put_floats(out, m.data);
  return out;
}

EmbeddingMatrix decode_embeddings(std::string_view bytes, std::string source,
                                  std::string_view context) {
  if (bytes.size() < kEmbHeader)
    throw IntegrityError(std::string(context) + ": truncated embedding header");
  if (bytes.substr(0, 4) != kEmbMagic)
    throw FormatError(std::string(context) + ": bad embedding magic");
  const auto dim = get_le<std::uint32_t>(bytes, 4);
  const auto rows = get_le<std::uint64_t>(bytes, 8);
  const std::uint64_t expected = kEmbHeader + rows * dim * sizeof(float);
  if (bytes.size() != expected)
    throw IntegrityError(std::string(context) + ": expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(bytes.size()));
  EmbeddingMatrix m(std::move(source), dim, rows);
  get_floats(bytes, kEmbHeader, m.data);
  return m;
}

void write_embeddings_file(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  write_file(path, encode_embeddings(m));
}

EmbeddingMatrix read_embeddings_file(const std::filesystem::path& path, std::string source) {
  return decode_embeddings(read_file(path), std::move(source), path.filename().string());
}

std::string encode_scores(const ScoreTable& t) {
  std::string out;
  out.reserve(kScoreHeader + t.scores.size() * sizeof(float));
  out.append(kScoreMagic);
  put_le<std::uint64_t>(out, t.scores.size());
  put_floats(out, t.scores);
  return out;
}

ScoreTable decode_scores(std::string_view bytes, std::string source,
                         std::string_view context) {
  if (bytes.size() < kScoreHeader)
    throw IntegrityError(std::string(context) + ": truncated score header");
  if (bytes.substr(0, 4) != kScoreMagic)
    throw FormatError(std::string(context) + ": bad score magic");
  const auto count = get_le<std::uint64_t>(bytes, 4);
  if (bytes.size() != kScoreHeader + count * sizeof(float))
    throw IntegrityError(std::string(context) + ": score count does not match file size");
  ScoreTable t{std::move(source), std::vector<float>(count)};
  get_floats(bytes, kScoreHeader, t.scores);
  return t;
}

std::string score_file_name(std::string_view source) {
  return std::string(source) + ".scores.f32";
}

void write_scores_file(const std::filesystem::path& path, const ScoreTable& t) {
  write_file(path, encode_scores(t));
}

ScoreTable read_scores_file(const std::filesystem::path& path, std::string source) {
  return decode_scores(read_file(path), std::move(source), path.filename().string());
}

}  // namespace capforge
