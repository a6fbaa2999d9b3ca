#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace capforge {

using RecordId = std::uint64_t;

struct CaptionVariant {
  std::string source_name;
  double temperature = 0.0;
  std::string text;

  bool operator==(const CaptionVariant&) const = default;
};

struct Record {
  RecordId id = 0;
  // Source record id for pools produced by materialize().
  std::optional<RecordId> provenance;
  std::string raw_caption;
  std::vector<CaptionVariant> synthetic_variants;

  bool operator==(const Record&) const = default;
};

// Embedding source label for a synthetic variant: "syn.{src}.{temp:.2f}".
std::string variant_source_label(std::string_view source_name, double temperature);
std::string variant_source_label(const CaptionVariant& v);

inline constexpr std::string_view kImageSource = "image";
inline constexpr std::string_view kRawSource = "raw";

// Row-major float32 matrix, one row per record.
struct EmbeddingMatrix {
  std::string source;
  std::uint32_t dim = 0;
  std::vector<float> data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::string source_label, std::uint32_t d, std::size_t rows = 0)
      : source(std::move(source_label)), dim(d), data(rows * d, 0.0f) {}

  std::size_t rows() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data.data() + i * dim, dim};
  }
  std::span<float> row(std::size_t i) noexcept { return {data.data() + i * dim, dim}; }
  void append_row(std::span<const float> v) { data.insert(data.end(), v.begin(), v.end()); }

  bool operator==(const EmbeddingMatrix&) const = default;
};

// Per-record alignment scores for one caption source, indexed like records.
struct ScoreTable {
  std::string source;
  std::vector<float> scores;

  std::size_t size() const noexcept { return scores.size(); }
  bool operator==(const ScoreTable&) const = default;
};

// Bitset over record indices with cached cardinality.
class SelectionMask {
 public:
  SelectionMask() = default;
  explicit SelectionMask(std::size_t n) : words_((n + 63) / 64, 0), size_(n) {}

  std::size_t size() const noexcept { return size_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (!(words_[i >> 6] & bit)) {
      words_[i >> 6] |= bit;
      ++count_;
    }
  }
  void reset(std::size_t i) noexcept {
    const std::uint64_t bit = std::uint64_t{1} << (i & 63);
    if (words_[i >> 6] & bit) {
      words_[i >> 6] &= ~bit;
      --count_;
    }
  }

  std::vector<std::size_t> indices() const;

  bool operator==(const SelectionMask& o) const noexcept {
    return size_ == o.size_ && words_ == o.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::size_t count_ = 0;
};

// Which caption a curated entry carries: the raw caption or one synthetic
// variant by index. Raw orders before every variant.
class CaptionChoice {
 public:
  constexpr CaptionChoice() = default;
  static constexpr CaptionChoice raw() { return CaptionChoice{-1}; }
  static constexpr CaptionChoice variant(std::uint32_t index) {
    return CaptionChoice{static_cast<std::int64_t>(index)};
  }

  constexpr bool is_raw() const noexcept { return value_ < 0; }
  constexpr std::uint32_t variant_index() const noexcept {
    return static_cast<std::uint32_t>(value_);
  }

  constexpr auto operator<=>(const CaptionChoice&) const = default;

 private:
  constexpr explicit CaptionChoice(std::int64_t v) : value_(v) {}
  std::int64_t value_ = -1;
};

struct CuratedEntry {
  RecordId id = 0;
  CaptionChoice caption;

  constexpr auto operator<=>(const CuratedEntry&) const = default;
};

}  // namespace capforge
