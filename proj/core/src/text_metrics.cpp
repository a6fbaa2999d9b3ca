#include "capforge/text_metrics.hpp"

#include <algorithm>
#include <numeric>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "capforge/binary_io.hpp"
#include "capforge/errors.hpp"
#include "capforge/rng.hpp"

namespace capforge {

namespace detail {
extern const std::string_view kBundledVisualVocab;
extern const std::string_view kBundledNouns;
extern const std::string_view kBundledFillers;
}  // namespace detail

namespace {

constexpr std::uint64_t kSampleTag = 0x73616d706c65ULL;

bool is_token_char(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); }

void split_into(std::string_view mapped, TokenSeq& out) {
  std::size_t pos = 0;
  while (pos < mapped.size()) {
    while (pos < mapped.size() && mapped[pos] == ' ') ++pos;
    std::size_t end = pos;
    while (end < mapped.size() && mapped[end] != ' ') ++end;
    if (end > pos) out.emplace_back(mapped.substr(pos, end - pos));
    pos = end;
  }
}

std::string map_ascii(std::string_view text) {
  std::string mapped(text);
  for (char& ch : mapped) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    if (!is_token_char(static_cast<unsigned char>(ch))) ch = ' ';
  }
  return mapped;
}

std::string map_unicode(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<std::int32_t>(text.size())));
  if (U_SUCCESS(status)) {
    icu::UnicodeString normalized = nfc->normalize(u, status);
    if (U_SUCCESS(status)) u = std::move(normalized);
  }
  u.toLower(icu::Locale::getRoot());

  std::string mapped;
  mapped.reserve(static_cast<std::size_t>(u.length()));
  for (std::int32_t i = 0; i < u.length();) {
    const UChar32 c = u.char32At(i);
    mapped.push_back(is_token_char(static_cast<char32_t>(c)) ? static_cast<char>(c) : ' ');
    i = u.moveIndex32(i, 1);
  }
  return mapped;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  const bool ascii = std::all_of(text.begin(), text.end(),
                                 [](char ch) { return static_cast<unsigned char>(ch) < 0x80; });
  TokenSeq tokens;
  split_into(ascii ? map_ascii(text) : map_unicode(text), tokens);
  return tokens;
}

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

Lexicon::Lexicon(std::span<const std::string> words) : words_(words.begin(), words.end()) {}

std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::string word(line);
    for (char& ch : word)
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    words.push_back(std::move(word));
  }
  return words;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  const auto words = parse_word_list(read_file(path));
  return Lexicon(words);
}

const std::vector<std::string>& bundled_visual_vocab_words() {
  static const auto words = parse_word_list(detail::kBundledVisualVocab);
  return words;
}
const std::vector<std::string>& bundled_noun_words() {
  static const auto words = parse_word_list(detail::kBundledNouns);
  return words;
}
const std::vector<std::string>& bundled_filler_words() {
  static const auto words = parse_word_list(detail::kBundledFillers);
  return words;
}
const Lexicon& bundled_visual_vocab() {
  static const Lexicon lex(bundled_visual_vocab_words());
  return lex;
}
const Lexicon& bundled_nouns() {
  static const Lexicon lex(bundled_noun_words());
  return lex;
}

double grounding_ratio(const TokenSeq& tokens, const Lexicon& vocab) {
  if (vocab.empty()) throw DomainError("grounding_ratio: visual vocabulary is empty");
  if (tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : tokens) hits += vocab.contains(t);
  return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

double grounding_ratio(std::string_view text, const Lexicon& vocab) {
  return grounding_ratio(tokenize(text), vocab);
}

std::size_t TrigramCounter::KeyHash::operator()(const Key& k) const noexcept {
  return static_cast<std::size_t>(mix64((std::uint64_t{k.a} << 32 | k.b) ^ mix64(k.c)));
}

std::uint32_t TrigramCounter::intern(const std::string& token) {
  const auto [it, inserted] = token_ids_.emplace(token, static_cast<std::uint32_t>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

void TrigramCounter::add(const TokenSeq& tokens) {
  if (tokens.size() < 3) return;
  std::uint32_t a = intern(tokens[0]);
  std::uint32_t b = intern(tokens[1]);
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const std::uint32_t c = intern(tokens[i]);
    trigrams_.insert({a, b, c});
    a = b;
    b = c;
  }
}

void TrigramCounter::merge(const TrigramCounter& other) {
  for (const Key& k : other.trigrams_) {
    trigrams_.insert({intern(other.tokens_[k.a]), intern(other.tokens_[k.b]),
                      intern(other.tokens_[k.c])});
  }
}

std::size_t unique_trigrams(std::span<const std::string> captions) {
  TrigramCounter counter;
  for (const auto& c : captions) counter.add(c);
  return counter.count();
}

std::size_t unique_nouns(std::span<const std::string> captions, const Lexicon& lexicon) {
  if (lexicon.empty()) throw DomainError("unique_nouns: noun lexicon is empty");
  std::unordered_set<std::string> seen;
  for (const auto& c : captions)
    for (auto& t : tokenize(c))
      if (lexicon.contains(t)) seen.insert(std::move(t));
  return seen.size();
}

std::vector<std::size_t> sample_order(std::size_t total, std::size_t n, std::uint64_t seed) {
  if (n > total)
    throw DomainError("cannot sample " + std::to_string(n) + " of " + std::to_string(total));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed, 0, kSampleTag);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n);
  return order;
}

CuratedSet sample_subset(const CuratedSet& curated, std::size_t n, std::uint64_t seed) {
  CuratedSet out;
  out.tau_used = curated.tau_used;
  out.tau_syn_used = curated.tau_syn_used;
  out.provenance = curated.provenance;
  for (std::size_t i : sample_order(curated.entries.size(), n, seed))
    out.entries.push_back(curated.entries[i]);
  out.normalize();
  return out;
}

std::vector<std::string> curated_captions(const PoolHandle& handle, const CuratedSet& curated) {
  std::vector<std::string> texts;
  texts.reserve(curated.entries.size());
  for (const auto& e : curated.entries) {
    const auto index = handle.index_of(e.id);
    if (!index) throw DataError("curated entry references unknown record id " + std::to_string(e.id));
    texts.push_back(handle.caption_text(*index, e.caption));
  }
  return texts;
}

DiversityCurve diversity_curve(std::span<const std::string> captions,
                               std::span<const std::size_t> sizes, std::uint64_t seed,
                               const Lexicon& nouns) {
  if (nouns.empty()) throw DomainError("diversity_curve: noun lexicon is empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > captions.size())
      throw DomainError("subset size " + std::to_string(sizes[i]) + " exceeds " +
                        std::to_string(captions.size()) + " entries");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw DomainError("subset sizes must be strictly increasing");
  }
  DiversityCurve curve;
  if (sizes.empty()) return curve;

  const auto order = sample_order(captions.size(), sizes.back(), seed);
  TrigramCounter trigrams;
  std::unordered_set<std::string> seen_nouns;
  std::size_t consumed = 0;
  for (std::size_t size : sizes) {
    for (; consumed < size; ++consumed) {
      TokenSeq tokens = tokenize(captions[order[consumed]]);
      trigrams.add(tokens);
      for (auto& t : tokens)
        if (nouns.contains(t)) seen_nouns.insert(std::move(t));
    }
    curve.push_back({size, trigrams.count(), seen_nouns.size()});
  }
  return curve;
}

DiversityCurve diversity_curve(const PoolHandle& handle, const CuratedSet& curated,
                               std::span<const std::size_t> sizes, std::uint64_t seed,
                               const Lexicon& nouns) {
  const auto captions = curated_captions(handle, curated);
  return diversity_curve(captions, sizes, seed, nouns);
}

}  // namespace capforge
