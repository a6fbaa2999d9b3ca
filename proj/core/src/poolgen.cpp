#include "capforge/poolgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "capforge/errors.hpp"
#include "capforge/parallel.hpp"
#include "capforge/rng.hpp"
#include "capforge/text_metrics.hpp"

namespace capforge {

namespace {

// Stream tags for per-record randomness.
enum Tag : std::uint64_t {
  kTagConcepts = 1,
  kTagAlpha = 2,
  kTagRawText = 3,
  kTagRawNoise = 4,
  kTagConceptVector = 5,
  kTagSynText = 0x100,
  kTagSynNoise = 0x200,
};

constexpr double kAlphaClamp = 0.999;
constexpr std::uint32_t kMinConcepts = 2;
constexpr std::uint32_t kMaxConcepts = 12;
constexpr std::uint32_t kMaxVocab = 1'000'000;

constexpr std::array<std::string_view, 8> kBoilerplate{
    "Image Not Found",   "No Image Available", "Photo not available", "placeholder image",
    "Click to enlarge",  "image unavailable",  "default thumbnail",   "Untitled",
};

// Caption templates; {a} adjective, {p} preposition, {s} scene, {0}-{2} concepts.
constexpr std::array<std::string_view, 12> kTemplates{
    "a {a} {0} with a {a} {1} on a {s}",
    "a photo of a {a} {0} {p} a {1} in the {s}",
    "a {0} and a {a} {1} {p} the {2} in a {s}",
    "an image of a {a} {0} in a {a} {s}",
    "a close up of a {0} {p} a {a} {1}",
    "there is a {a} {0} {p} the {1} on the {s}",
    "a {a} {0} sitting {p} a {a} {1} in a {s}",
    "the {a} {0} is {p} the {a} {1} with a {s}",
    "two {a} {0} {p} a {a} {1} on the {s}",
    "a picture of a {a} {0} and a {1} in the {s}",
    "a {a} {0} {p} a {1} with a {a} {2}",
    "a {a} {0} next to a {a} {1} in a {a} {s}",
};
constexpr std::array<std::string_view, 16> kAdjectives{
    "white", "black", "red",   "blue",  "green", "small", "large", "old",
    "young", "wooden", "yellow", "brown", "gray", "tall",  "empty", "bright",
};
constexpr std::array<std::string_view, 16> kScenes{
    "room", "street", "field", "kitchen", "table", "grass", "beach", "road",
    "water", "sky", "city", "park", "snow", "forest", "window", "floor",
};
constexpr std::array<std::string_view, 8> kPrepositions{
    "on", "in", "near", "under", "behind", "beside", "above", "by",
};
constexpr std::array<std::string_view, 6> kSeparators{" ", " ", " ", ", ", " - ", " | "};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::size_t scaled_count(std::size_t full, double factor) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(static_cast<double>(full) * factor)),
                                 1, full);
}

const std::set<std::string, std::less<>>& reserved_words() {
  static const auto words = [] {
    std::set<std::string, std::less<>> s;
    for (const auto* list : {&bundled_noun_words(), &bundled_filler_words(), &bundled_visual_vocab_words()})
      s.insert(list->begin(), list->end());
    for (auto t : kTemplates)
      for (auto& tok : tokenize(t)) s.insert(tok);
    return s;
  }();
  return words;
}

std::string pseudo_word(std::uint64_t v) {
  const std::size_t base = kConsonants.size() * kVowels.size();
  std::string w;
  std::size_t syllables = 0;
  do {
    const std::size_t s = v % base;
    v /= base;
    w.push_back(kConsonants[s / kVowels.size()]);
    w.push_back(kVowels[s % kVowels.size()]);
    ++syllables;
  } while (v > 0 || syllables < 3);
  if (reserved_words().contains(w)) w.push_back('q');
  return w;
}

std::vector<float> to_float(std::span<const double> v) {
  return {v.begin(), v.end()};
}

// Tables shared by every record of one config.
class Generator {
 public:
  explicit Generator(const GenConfig& config) : config_(config) {
    zipf_cdf_.resize(config.concept_vocab_size);
    double total = 0.0;
    for (std::uint32_t i = 0; i < config.concept_vocab_size; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), config.zipf_exponent);
      zipf_cdf_[i] = total;
    }
    words_.reserve(config.concept_vocab_size);
    for (std::uint32_t i = 0; i < config.concept_vocab_size; ++i) words_.push_back(concept_word(i));
  }

  RecordTruth truth(std::uint64_t index) const {
    RecordTruth t;
    CounterRng concepts_rng(config_.seed, index, kTagConcepts);
    const auto count = kMinConcepts + static_cast<std::uint32_t>(
                                          concepts_rng.below(kMaxConcepts - kMinConcepts + 1));
    std::set<std::uint32_t> drawn;
    while (drawn.size() < count) drawn.insert(draw_concept(concepts_rng));
    t.concepts.assign(drawn.begin(), drawn.end());

    CounterRng alpha_rng(config_.seed, index, kTagAlpha);
    t.boilerplate = alpha_rng.uniform() < config_.raw_noise_rate;
    t.raw_alpha = draw_alpha(alpha_rng, config_.raw_alignment_mean, config_.raw_alignment_sd);
    for (std::size_t j = 0; j < config_.syn_sources.size(); ++j)
      t.syn_alpha.push_back(
          draw_alpha(alpha_rng, config_.syn_alignment_mean, config_.syn_alignment_sd));
    return t;
  }

  GeneratedRecord record(std::uint64_t index) const {
    GeneratedRecord g;
    g.truth = truth(index);
    g.record.id = index;
    g.record.raw_caption = raw_caption(index, g.truth);

    const auto image = embed_concept(g.truth.concepts, config_.embedding_dim, config_.seed);
    g.image = to_float(image);
    g.raw = to_float(attach_alignment(image, g.truth.raw_alpha,
                                      derive_key({config_.seed, index, kTagRawNoise})));
    for (std::size_t j = 0; j < config_.syn_sources.size(); ++j) {
      const auto& src = config_.syn_sources[j];
      g.record.synthetic_variants.push_back(
          {src.source_name, src.temperature, syn_caption(index, j, g.truth)});
      g.syn.push_back(to_float(attach_alignment(
          image, g.truth.syn_alpha[j], derive_key({config_.seed, index, kTagSynNoise + j}))));
    }
    return g;
  }

 private:
  std::uint32_t draw_concept(CounterRng& rng) const {
    const double u = rng.uniform() * zipf_cdf_.back();
    const auto it = std::upper_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
    return static_cast<std::uint32_t>(
        std::min<std::ptrdiff_t>(it - zipf_cdf_.begin(), static_cast<std::ptrdiff_t>(zipf_cdf_.size()) - 1));
  }

  static double draw_alpha(CounterRng& rng, double mean, double sd) {
    return std::clamp(mean + sd * rng.normal(), -kAlphaClamp, kAlphaClamp);
  }

  std::string raw_caption(std::uint64_t index, const RecordTruth& t) const {
    CounterRng rng(config_.seed, index, kTagRawText);
    if (t.boilerplate) return std::string(kBoilerplate[rng.below(kBoilerplate.size())]);

    const auto& fillers = bundled_filler_words();
    std::vector<std::string> words;
    for (std::uint32_t c : t.concepts)
      if (rng.uniform() < 0.7) words.push_back(words_[c]);
    if (words.empty()) words.push_back(words_[t.concepts[rng.below(t.concepts.size())]]);
    const std::uint64_t n_fillers = 3 + rng.below(6);
    for (std::uint64_t i = 0; i < n_fillers; ++i) words.push_back(fillers[rng.below(fillers.size())]);
    if (rng.uniform() < 0.3) {
      // Model-number style token, e.g. "k240".
      std::string code(1, kConsonants[rng.below(kConsonants.size())]);
      code += std::to_string(100 + rng.below(900));
      words.push_back(std::move(code));
    }
    for (std::size_t i = words.size(); i > 1; --i) std::swap(words[i - 1], words[rng.below(i)]);

    std::string caption;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i > 0) caption += kSeparators[rng.below(kSeparators.size())];
      caption += words[i];
    }
    if (rng.uniform() < 0.5) caption[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(caption[0])));
    return caption;
  }

  std::string syn_caption(std::uint64_t index, std::size_t source, const RecordTruth& t) const {
    const double factor = config_.syn_sources[source].diversity_factor;
    CounterRng rng(config_.seed, index, kTagSynText + source);
    const std::size_t n_templates = scaled_count(kTemplates.size(), factor);
    const std::size_t n_adjectives = scaled_count(kAdjectives.size(), factor);
    const std::size_t n_prepositions = scaled_count(kPrepositions.size(), factor);
    const std::size_t n_scenes = scaled_count(kScenes.size(), factor);
    // Concepts are sorted by id, so captions mention the most frequent ones.
    const std::size_t mentioned = std::min(scaled_count(3, factor), t.concepts.size());

    const std::string_view tmpl = kTemplates[rng.below(n_templates)];
    std::string out;
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      if (tmpl[i] != '{') {
        out.push_back(tmpl[i]);
        continue;
      }
      const char slot = tmpl[i + 1];
      i += 2;
      if (slot == 'a') {
        out += kAdjectives[rng.below(n_adjectives)];
      } else if (slot == 'p') {
        out += kPrepositions[rng.below(n_prepositions)];
      } else if (slot == 's') {
        out += kScenes[rng.below(n_scenes)];
      } else {
        out += words_[t.concepts[static_cast<std::size_t>(slot - '0') % mentioned]];
      }
    }
    return out;
  }

  const GenConfig& config_;
  std::vector<double> zipf_cdf_;
  std::vector<std::string> words_;
};

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path, std::string("invalid value: ") + e.what());
  }
}

bool valid_source_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char ch) {
    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
  });
}

void check_alignment(double mean, double sd, const std::string& prefix) {
  if (!std::isfinite(mean) || !std::isfinite(sd)) throw ConfigError(prefix + "_mean", "must be finite");
  if (sd < 0.0) throw ConfigError(prefix + "_sd", "must be >= 0");
  if (!(mean - 3.0 * sd > -1.0 && mean + 3.0 * sd < 1.0))
    throw ConfigError(prefix + "_mean", "mean -/+ 3 sd must stay inside (-1, 1)");
}

}  // namespace

void GenConfig::validate() const {
  if (num_records > kMaxGeneratedRecords)
    throw ConfigError("num_records", "exceeds generator limit " + std::to_string(kMaxGeneratedRecords));
  if (embedding_dim < 2) throw ConfigError("embedding_dim", "must be >= 2");
  if (records_per_shard < 1) throw ConfigError("records_per_shard", "must be >= 1");
  if (concept_vocab_size < kMaxConcepts || concept_vocab_size > kMaxVocab)
    throw ConfigError("concept_vocab_size", "must lie in [12, 1000000]");
  if (!(zipf_exponent > 0.0) || !std::isfinite(zipf_exponent))
    throw ConfigError("zipf_exponent", "must be positive");
  check_alignment(raw_alignment_mean, raw_alignment_sd, "raw_alignment");
  check_alignment(syn_alignment_mean, syn_alignment_sd, "syn_alignment");
  if (!(raw_noise_rate >= 0.0 && raw_noise_rate <= 1.0))
    throw ConfigError("raw_noise_rate", "must lie in [0, 1]");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < syn_sources.size(); ++i) {
    const auto& s = syn_sources[i];
    const std::string path = "syn_sources[" + std::to_string(i) + "].";
    if (!valid_source_name(s.source_name))
      throw ConfigError(path + "source_name", "must be nonempty [A-Za-z0-9_-]");
    if (!(s.temperature >= 0.0) || !std::isfinite(s.temperature))
      throw ConfigError(path + "temperature", "must be a nonnegative number");
    if (!(s.diversity_factor > 0.0 && s.diversity_factor <= 1.0))
      throw ConfigError(path + "diversity_factor", "must lie in (0, 1]");
    if (!labels.insert(variant_source_label(s.source_name, s.temperature)).second)
      throw ConfigError(path + "temperature", "duplicate (source_name, temperature)");
  }
}

nlohmann::json to_json(const GenConfig& c) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : c.syn_sources)
    sources.push_back({{"source_name", s.source_name},
                       {"temperature", s.temperature},
                       {"diversity_factor", s.diversity_factor}});
  return {{"num_records", c.num_records},
          {"embedding_dim", c.embedding_dim},
          {"records_per_shard", c.records_per_shard},
          {"seed", c.seed},
          {"concept_vocab_size", c.concept_vocab_size},
          {"zipf_exponent", c.zipf_exponent},
          {"raw_alignment_mean", c.raw_alignment_mean},
          {"raw_alignment_sd", c.raw_alignment_sd},
          {"syn_alignment_mean", c.syn_alignment_mean},
          {"syn_alignment_sd", c.syn_alignment_sd},
          {"raw_noise_rate", c.raw_noise_rate},
          {"syn_sources", sources}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", "generator config must be a JSON object");
  GenConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "num_records") c.num_records = get_field<std::uint64_t>(j, key, key);
    else if (key == "embedding_dim") c.embedding_dim = get_field<std::uint32_t>(j, key, key);
    else if (key == "records_per_shard") c.records_per_shard = get_field<std::uint64_t>(j, key, key);
    else if (key == "seed") c.seed = get_field<std::uint64_t>(j, key, key);
    else if (key == "concept_vocab_size") c.concept_vocab_size = get_field<std::uint32_t>(j, key, key);
    else if (key == "zipf_exponent") c.zipf_exponent = get_field<double>(j, key, key);
    else if (key == "raw_alignment_mean") c.raw_alignment_mean = get_field<double>(j, key, key);
    else if (key == "raw_alignment_sd") c.raw_alignment_sd = get_field<double>(j, key, key);
    else if (key == "syn_alignment_mean") c.syn_alignment_mean = get_field<double>(j, key, key);
    else if (key == "syn_alignment_sd") c.syn_alignment_sd = get_field<double>(j, key, key);
    else if (key == "raw_noise_rate") c.raw_noise_rate = get_field<double>(j, key, key);
    else if (key == "syn_sources") {
      if (!value.is_array()) throw ConfigError(key, "must be an array");
      c.syn_sources.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const auto& s = value[i];
        const std::string path = "syn_sources[" + std::to_string(i) + "].";
        if (!s.is_object()) throw ConfigError(path.substr(0, path.size() - 1), "must be an object");
        SynSourceConfig src;
        for (const auto& [k, _] : s.items()) {
          if (k == "source_name") src.source_name = get_field<std::string>(s, k, path + k);
          else if (k == "temperature") src.temperature = get_field<double>(s, k, path + k);
          else if (k == "diversity_factor") src.diversity_factor = get_field<double>(s, k, path + k);
          else throw ConfigError(path + k, "unknown field");
        }
        c.syn_sources.push_back(std::move(src));
      }
    } else {
      throw ConfigError(key, "unknown field");
    }
  }
  c.validate();
  return c;
}

std::span<const std::string_view> boilerplate_captions() { return kBoilerplate; }

std::vector<double> embed_concept(std::span<const std::uint32_t> concept_ids, std::uint32_t dim,
                                  std::uint64_t seed) {
  if (dim < 2) throw DomainError("embed_concept: dim must be >= 2");
  if (concept_ids.empty()) throw DomainError("embed_concept: empty concept set");
  std::vector<std::uint32_t> ids(concept_ids.begin(), concept_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<double> v(dim, 0.0);
  for (std::uint32_t id : ids) {
    CounterRng rng(seed, id, kTagConceptVector);
    for (auto& x : v) x += rng.normal();
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

std::vector<double> attach_alignment(std::span<const double> e_img, double alpha,
                                     std::uint64_t noise_seed) {
  if (!(std::abs(alpha) <= 1.0)) throw DomainError("attach_alignment: |alpha| must be <= 1");
  double norm2 = 0.0;
  for (double x : e_img) norm2 += x * x;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) throw DomainError("attach_alignment: e_img must be unit norm");

  CounterRng rng(noise_seed);
  std::vector<double> noise(e_img.size());
  for (;;) {
    double dot = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
      noise[i] = rng.normal();
      dot += noise[i] * e_img[i];
    }
    double n2 = 0.0;
    for (std::size_t i = 0; i < noise.size(); ++i) {
      noise[i] -= dot * e_img[i];
      n2 += noise[i] * noise[i];
    }
    if (n2 > 1e-12) {
      const double inv = 1.0 / std::sqrt(n2);
      for (auto& x : noise) x *= inv;
      break;
    }
  }

  const double ortho = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  std::vector<double> out(e_img.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * e_img[i] + ortho * noise[i];
  return out;
}

std::string concept_word(std::uint32_t concept_id) {
  if (concept_id >= kMaxVocab) throw DomainError("concept id out of range");
  const auto& nouns = bundled_noun_words();
  return concept_id < nouns.size() ? nouns[concept_id] : pseudo_word(concept_id - nouns.size());
}

std::vector<std::string> concept_words(const GenConfig& config) {
  std::vector<std::string> out;
  out.reserve(config.concept_vocab_size);
  for (std::uint32_t i = 0; i < config.concept_vocab_size; ++i) out.push_back(concept_word(i));
  return out;
}

RecordTruth record_truth(const GenConfig& config, std::uint64_t index) {
  config.validate();
  return Generator(config).truth(index);
}

GeneratedRecord generate_record(const GenConfig& config, std::uint64_t index) {
  config.validate();
  return Generator(config).record(index);
}

std::vector<std::string> generated_sources(const GenConfig& config) {
  std::vector<std::string> sources{std::string(kImageSource), std::string(kRawSource)};
  for (const auto& s : config.syn_sources) sources.push_back(variant_source_label(s.source_name, s.temperature));
  return sources;
}

PoolManifest generate_pool(const GenConfig& config, const std::filesystem::path& out_path,
                           std::size_t workers) {
  config.validate();
  const Generator gen(config);
  const auto sources = generated_sources(config);
  const auto layout = shard_layout(config.num_records, config.records_per_shard);
  std::filesystem::create_directories(out_path);

  std::vector<std::map<std::string, std::string>> sums(layout.size());
  parallel_for(layout.size(), workers, [&](std::size_t k) {
    const ShardRange& shard = layout[k];
    std::vector<Record> records;
    records.reserve(shard.size());
    std::vector<EmbeddingMatrix> matrices;
    for (const auto& s : sources) {
      matrices.emplace_back(s, config.embedding_dim);
      matrices.back().data.reserve(shard.size() * config.embedding_dim);
    }
    for (std::uint64_t i = shard.begin; i < shard.end; ++i) {
      GeneratedRecord g = gen.record(i);
      matrices[0].append_row(g.image);
      matrices[1].append_row(g.raw);
      for (std::size_t j = 0; j < g.syn.size(); ++j) matrices[2 + j].append_row(g.syn[j]);
      records.push_back(std::move(g.record));
    }
    sums[k] = write_shard(out_path, shard.index, records, matrices);
  });

  PoolManifest manifest;
  manifest.num_records = config.num_records;
  manifest.num_shards = layout.size();
  manifest.records_per_shard = config.records_per_shard;
  manifest.embedding_dim = config.embedding_dim;
  manifest.embedding_sources = sources;
  manifest.generator_seed = config.seed;
  for (auto& s : sums) manifest.checksums.merge(s);
  write_manifest(out_path, manifest);
  return manifest;
}

EmbeddingMatrix reference_embeddings(const GenConfig& config, std::size_t count) {
  config.validate();
  if (count == 0 || count > config.concept_vocab_size)
    throw DomainError("reference count must lie in [1, concept_vocab_size]");
  EmbeddingMatrix refs("reference", config.embedding_dim);
  for (std::uint32_t c = 0; c < count; ++c) {
    const std::uint32_t id[] = {c};
    refs.append_row(to_float(embed_concept(id, config.embedding_dim, config.seed)));
  }
  return refs;
}

}  // namespace capforge
