#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "capforge/pool.hpp"
#include "capforge/strategy.hpp"

namespace capforge {

// Lowercase tokens over [a-z0-9].
using TokenSeq = std::vector<std::string>;

// NFC-normalize, lowercase, map every character outside [a-z0-9] to a
// space, split on runs of spaces.
TokenSeq tokenize(std::string_view text);
std::size_t word_count(std::string_view text);

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

// A set of tokens: the visual-concept vocabulary or a noun lexicon.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::span<const std::string> words);

  bool contains(std::string_view token) const { return words_.find(token) != words_.end(); }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

 private:
  std::unordered_set<std::string, StringHash, std::equal_to<>> words_;
};

// UTF-8 word list: one token per line, '#' starts a comment line, blank
// lines skipped, entries trimmed and lowercased.
std::vector<std::string> parse_word_list(std::string_view text);
Lexicon load_lexicon(const std::filesystem::path& path);

const std::vector<std::string>& bundled_visual_vocab_words();
const std::vector<std::string>& bundled_noun_words();
const std::vector<std::string>& bundled_filler_words();
const Lexicon& bundled_visual_vocab();
const Lexicon& bundled_nouns();

// Fraction of tokens found in `vocab`; 0 for an empty caption. Throws
// DomainError when `vocab` is empty.
double grounding_ratio(std::string_view text, const Lexicon& vocab);
double grounding_ratio(const TokenSeq& tokens, const Lexicon& vocab);

// Distinct consecutive 3-token windows across a caption stream.
class TrigramCounter {
 public:
  void add(const TokenSeq& tokens);
  void add(std::string_view caption) { add(tokenize(caption)); }
  void merge(const TrigramCounter& other);
  std::size_t count() const noexcept { return trigrams_.size(); }

 private:
  struct Key {
    std::uint32_t a, b, c;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  std::uint32_t intern(const std::string& token);

  std::unordered_map<std::string, std::uint32_t> token_ids_;
  std::vector<std::string> tokens_;
  std::unordered_set<Key, KeyHash> trigrams_;
};

std::size_t unique_trigrams(std::span<const std::string> captions);
// Throws DomainError when `lexicon` is empty.
std::size_t unique_nouns(std::span<const std::string> captions, const Lexicon& lexicon);

// First n positions of a seeded Fisher-Yates shuffle of [0, total). The
// order for a smaller n is a prefix of the order for a larger one.
std::vector<std::size_t> sample_order(std::size_t total, std::size_t n, std::uint64_t seed);

// Uniform sample of n entries without replacement, re-sorted. Throws
// DomainError when n exceeds the set size.
CuratedSet sample_subset(const CuratedSet& curated, std::size_t n, std::uint64_t seed);

struct DiversityPoint {
  std::size_t subset_size = 0;
  std::size_t unique_trigrams = 0;
  std::size_t unique_nouns = 0;

  bool operator==(const DiversityPoint&) const = default;
};
using DiversityCurve = std::vector<DiversityPoint>;

// Nested random subsets: each size is a prefix of one sample order.
// `sizes` must be strictly increasing with the last <= |curated|.
DiversityCurve diversity_curve(const PoolHandle& handle, const CuratedSet& curated,
                               std::span<const std::size_t> sizes, std::uint64_t seed,
                               const Lexicon& nouns);
// Same, over caption texts already resolved from entries.
DiversityCurve diversity_curve(std::span<const std::string> captions,
                               std::span<const std::size_t> sizes, std::uint64_t seed,
                               const Lexicon& nouns);

// Caption text of every entry, in entry order. Throws DataError on a
// dangling entry.
std::vector<std::string> curated_captions(const PoolHandle& handle, const CuratedSet& curated);

}  // namespace capforge
