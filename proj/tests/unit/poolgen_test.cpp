#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "capforge/errors.hpp"
#include "capforge/pool.hpp"
#include "capforge/poolgen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace capforge;
using testutil::TempDir;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

GenConfig small_config(std::uint64_t n, std::uint64_t seed = 0) {
  GenConfig c;
  c.num_records = n;
  c.records_per_shard = 64;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Generator, EmptyPoolIsValid) {
  TempDir dir;
  const auto m = generate_pool(small_config(0), dir / "p");
  EXPECT_EQ(m.num_records, 0u);
  const PoolHandle h = open_pool(dir / "p");
  EXPECT_EQ(h.size(), 0u);
  EXPECT_TRUE(validate_pool(h).clean());
}

TEST(Generator, SameSeedSameChecksumsForAnyWorkerCount) {
  TempDir dir;
  const auto cfg = small_config(300, 7);
  const auto a = generate_pool(cfg, dir / "a", 1);
  const auto b = generate_pool(cfg, dir / "b", 4);
  EXPECT_EQ(a.checksums, b.checksums);
  EXPECT_EQ(testutil::slurp(dir / "a" / "manifest.json"), testutil::slurp(dir / "b" / "manifest.json"));
  const auto c = generate_pool(small_config(300, 8), dir / "c", 1);
  EXPECT_NE(a.checksums, c.checksums);
}

TEST(Generator, SmallerPoolIsPrefixOfLarger) {
  for (std::uint64_t i : {0ull, 17ull, 49ull}) {
    const auto a = generate_record(small_config(50, 3), i);
    const auto b = generate_record(small_config(5000, 3), i);
    EXPECT_EQ(a.record, b.record);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.raw, b.raw);
  }
}

TEST(Generator, PerRecordCosineEqualsDrawnAlpha) {
  GenConfig cfg = small_config(2000, 11);
  cfg.syn_sources = {{"blip2", 0.75, 0.5}, {"coca", 1.0, 0.9}};
  for (std::uint64_t i = 0; i < cfg.num_records; ++i) {
    const auto g = generate_record(cfg, i);
    const std::size_t d = cfg.embedding_dim;
    ASSERT_NEAR(oracle::cos(g.image.data(), g.raw.data(), d), g.truth.raw_alpha, 1e-6);
    for (std::size_t s = 0; s < g.syn.size(); ++s)
      ASSERT_NEAR(oracle::cos(g.image.data(), g.syn[s].data(), d), g.truth.syn_alpha[s], 1e-6);
    ASSERT_LE(std::abs(g.truth.raw_alpha), 0.999);
  }
}

TEST(Generator, MeanAlignmentNearTargets) {
  // Standard error is 0.05 / sqrt(20000) ~ 3.5e-4, far inside the band.
  const GenConfig cfg = small_config(20000, 1);
  double raw = 0, syn = 0;
  for (std::uint64_t i = 0; i < cfg.num_records; ++i) {
    const auto g = generate_record(cfg, i);
    raw += oracle::cos(g.image.data(), g.raw.data(), cfg.embedding_dim);
    syn += oracle::cos(g.image.data(), g.syn[0].data(), cfg.embedding_dim);
  }
  EXPECT_NEAR(raw / 20000, 0.208, 0.005);
  EXPECT_NEAR(syn / 20000, 0.251, 0.005);
}

TEST(Generator, SyntheticCaptionsAreLessDiverse) {
  const GenConfig cfg = small_config(3000, 2);
  std::vector<std::string> raw, syn;
  for (std::uint64_t i = 0; i < cfg.num_records; ++i) {
    const auto g = generate_record(cfg, i);
    raw.push_back(g.record.raw_caption);
    syn.push_back(g.record.synthetic_variants.at(0).text);
  }
  EXPECT_LT(oracle::trigram_set(syn).size(), oracle::trigram_set(raw).size());
}

TEST(Generator, NoiseRateExtremes) {
  GenConfig cfg = small_config(200);
  std::set<std::string> boiler;
  for (auto b : boilerplate_captions()) boiler.emplace(b);
  EXPECT_EQ(boiler.size(), 8u);
  cfg.raw_noise_rate = 1.0;
  for (std::uint64_t i = 0; i < 200; ++i) EXPECT_TRUE(boiler.count(generate_record(cfg, i).record.raw_caption));
  cfg.raw_noise_rate = 0.0;
  for (std::uint64_t i = 0; i < 200; ++i) EXPECT_FALSE(boiler.count(generate_record(cfg, i).record.raw_caption));
}

TEST(Generator, RecordsCarryOneVariantPerSource) {
  GenConfig cfg = small_config(10);
  cfg.syn_sources = {{"blip2", 0.5, 0.5}, {"blip2", 1.0, 0.5}};
  EXPECT_EQ(generated_sources(cfg),
            (std::vector<std::string>{"image", "raw", "syn.blip2.0.50", "syn.blip2.1.00"}));
  const auto g = generate_record(cfg, 4);
  ASSERT_EQ(g.record.synthetic_variants.size(), 2u);
  EXPECT_EQ(g.record.synthetic_variants[1].temperature, 1.0);
  EXPECT_EQ(g.record.id, 4u);
}

TEST(EmbedConcept, DeterministicUnitNormOrderFree) {
  const std::vector<std::uint32_t> a{3, 9, 1}, b{1, 9, 3, 3};
  const auto va = embed_concept(a, 64, 5);
  EXPECT_EQ(va, embed_concept(a, 64, 5));
  const auto vb = embed_concept(b, 64, 5);
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_DOUBLE_EQ(va[i], vb[i]);
  EXPECT_NEAR(std::sqrt(dot(va, va)), 1.0, 1e-6);
  EXPECT_THROW(embed_concept({}, 64, 5), DomainError);
  EXPECT_THROW(embed_concept(a, 1, 5), DomainError);
}

TEST(EmbedConcept, DisjointSetsAreNearlyOrthogonal) {
  for (std::uint32_t t = 0; t < 1000; ++t) {
    const std::vector<std::uint32_t> a{2 * t, 2 * t + 4000}, b{2 * t + 1, 2 * t + 4001};
    const auto va = embed_concept(a, 64, 9);
    const auto vb = embed_concept(b, 64, 9);
    ASSERT_LT(std::abs(dot(va, vb)), 0.5) << t;
  }
}

TEST(AttachAlignment, ExactCosine) {
  const std::vector<std::uint32_t> c{1, 2};
  const auto img = embed_concept(c, 64, 1);
  const auto same = attach_alignment(img, 1.0, 3);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(same[i], img[i], 1e-12);
  EXPECT_NEAR(dot(img, attach_alignment(img, 0.0, 3)), 0.0, 1e-6);
  const auto t = attach_alignment(img, 0.243, 3);
  EXPECT_NEAR(dot(img, t) / std::sqrt(dot(t, t)), 0.243, 1e-6);
  EXPECT_NEAR(dot(img, attach_alignment(img, -0.7, 4)), -0.7, 1e-6);
  EXPECT_THROW(attach_alignment(img, 1.5, 3), DomainError);
  std::vector<double> not_unit(img.begin(), img.end());
  not_unit[0] += 0.5;
  EXPECT_THROW(attach_alignment(not_unit, 0.2, 3), DomainError);
}

TEST(ConceptWords, DistinctAndTokenClean) {
  std::set<std::string> seen;
  for (std::uint32_t i = 0; i < 20000; ++i) {
    const std::string w = concept_word(i);
    ASSERT_TRUE(seen.insert(w).second) << w;
    ASSERT_EQ(oracle::tokens(w), std::vector<std::string>{w});
  }
  GenConfig cfg;
  cfg.concept_vocab_size = 50;
  EXPECT_EQ(concept_words(cfg).size(), 50u);
}

TEST(ReferenceEmbeddings, UnitRows) {
  const auto refs = reference_embeddings(GenConfig{}, 20);
  ASSERT_EQ(refs.rows(), 20u);
  for (std::size_t r = 0; r < 20; ++r) EXPECT_NEAR(oracle::cos(refs.row(r).data(), refs.row(r).data(), 64), 1.0, 1e-6);
}

TEST(GenConfigJson, RoundTripAndStrictness) {
  GenConfig c;
  c.num_records = 123;
  c.syn_sources = {{"blip2", 0.5, 0.3}, {"coca", 1.0, 1.0}};
  EXPECT_EQ(gen_config_from_json(to_json(c)), c);
  EXPECT_EQ(gen_config_from_json(nlohmann::json::object()), GenConfig{});
  auto field_of = [](const nlohmann::json& j) {
    try {
      gen_config_from_json(j);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of({{"bogus", 1}}), "bogus");
  EXPECT_EQ(field_of({{"num_records", "many"}}), "num_records");
  EXPECT_EQ(field_of({{"raw_alignment_mean", 1.5}}), "raw_alignment_mean");
  EXPECT_EQ(field_of({{"num_records", kMaxGeneratedRecords + 1}}), "num_records");
  EXPECT_EQ(field_of({{"records_per_shard", 0}}), "records_per_shard");
  EXPECT_NE(field_of({{"syn_sources", {{{"source_name", "x"}, {"diversity_factor", 0.0}}}}}).find("diversity_factor"),
            std::string::npos);
}
