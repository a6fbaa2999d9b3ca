#include <gtest/gtest.h>

#include <random>

#include "capforge/curation.hpp"
#include "capforge/errors.hpp"
#include "capforge/kmeans.hpp"
#include "capforge/poolgen.hpp"
#include "capforge/scoring.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace capforge;
using testutil::TempDir;

namespace {

std::set<oracle::Entry> entries_of(const CuratedSet& s) {
  std::set<oracle::Entry> out;
  for (const auto& e : s.entries)
    out.insert({e.id, e.caption.is_raw() ? -1L : static_cast<long>(e.caption.variant_index())});
  return out;
}

StrategySpec make(StrategyName name, std::optional<FilterSpec> f = std::nullopt) {
  StrategySpec s;
  s.name = name;
  s.filter = f;
  if (needs_syn_source(name)) s.syn_source = "blip2";
  return s;
}

CurationInputs inputs_of(const std::vector<RecordId>& ids, const std::vector<float>& raw,
                         const std::vector<float>& syn, std::uint32_t variant = 0) {
  CurationInputs in;
  in.ids = ids;
  in.raw_scores = ScoreTable{"raw", raw};
  in.syn_scores = ScoreTable{"syn.blip2.0.75", syn};
  in.syn_variant.assign(ids.size(), variant);
  in.best_variant.assign(ids.size(), variant);
  return in;
}

// The ten-record setup: raw scores rank ids 0..2 top at 30% (tau 0.7);
// exactly four of ids 3..9 have synthetic score >= 0.7.
CurationInputs ten_records() {
  std::vector<RecordId> ids(10);
  std::iota(ids.begin(), ids.end(), RecordId{0});
  std::vector<float> raw{0.9f, 0.8f, 0.7f, 0.6f, 0.5f, 0.4f, 0.3f, 0.2f, 0.1f, 0.0f};
  std::vector<float> syn{0.1f, 0.1f, 0.1f, 0.75f, 0.2f, 0.9f, 0.7f, 0.69f, 0.8f, 0.3f};
  return inputs_of(ids, raw, syn);
}

}  // namespace

TEST(Strategy, FilteredMixSizeSeven) {
  const auto set = apply_strategy(make(StrategyName::kRawTopPlusSynRestFiltered, FilterSpec::top_fraction(30)),
                                  ten_records());
  EXPECT_EQ(set.size(), 7u);
  EXPECT_FLOAT_EQ(static_cast<float>(*set.tau_used), 0.7f);
}

TEST(Strategy, ConcatSizeTen) {
  const auto set = apply_strategy(make(StrategyName::kConcatTopPlusSynRestFiltered, FilterSpec::top_fraction(30)),
                                  ten_records());
  EXPECT_EQ(set.size(), 3u * 2u + 4u);
}

TEST(Strategy, UnfilteredMixCoversPool) {
  const auto set = apply_strategy(make(StrategyName::kRawTopPlusSynRest, FilterSpec::top_fraction(30)),
                                  ten_records());
  EXPECT_EQ(set.size(), 10u);
  std::size_t raw = 0;
  for (const auto& e : set.entries) raw += e.caption.is_raw();
  EXPECT_EQ(raw, 3u);
}

TEST(Strategy, EntriesSortedAndUnique) {
  const auto set = apply_strategy(make(StrategyName::kUnionTopRawTopSyn, FilterSpec::top_fraction(50)),
                                  ten_records());
  EXPECT_TRUE(std::is_sorted(set.entries.begin(), set.entries.end()));
  EXPECT_EQ(std::adjacent_find(set.entries.begin(), set.entries.end()), set.entries.end());
  ASSERT_TRUE(set.tau_syn_used.has_value());
}

TEST(Strategy, EveryNameAgainstEnumerationOracle) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<RecordId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i * 3 + 1;
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<float> raw(n), syn(n);
    for (auto& x : raw) x = static_cast<float>(rng() % 25) / 25.0f;
    for (auto& x : syn) x = static_cast<float>(rng() % 25) / 25.0f;
    auto in = inputs_of(ids, raw, syn, 1);
    std::vector<long> best(n);
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = static_cast<long>(rng() % 3);
      in.best_variant[i] = static_cast<std::uint32_t>(best[i]);
    }
    std::vector<bool> keep(n);
    SelectionMask mask(n);
    for (std::size_t i = 0; i < n; ++i)
      if ((keep[i] = rng() % 2)) mask.set(i);
    in.in1k_mask = mask;
    const FilterSpec f = t % 3 == 0 ? FilterSpec::threshold(static_cast<float>(rng() % 25) / 25.0f)
                                    : FilterSpec::top_fraction(std::uniform_real_distribution<double>(1, 100)(rng));
    for (StrategyName name : all_strategy_names()) {
      for (bool in1k : {false, true}) {
        StrategySpec spec = make(name, needs_filter(name) ? std::optional(f) : std::nullopt);
        spec.in1k_intersect = in1k;
        const auto got = apply_strategy(spec, in);
        const auto want = oracle::strategy(name, f, ids, raw, syn, 1, best, in1k ? keep : std::vector<bool>{});
        ASSERT_EQ(entries_of(got), want.entries) << spec.label() << " trial " << t;
        ASSERT_EQ(got.size(), want.entries.size());
        if (needs_filter(name)) {
          ASSERT_EQ(got.tau_used.has_value(), want.tau.has_value());
          if (want.tau) ASSERT_DOUBLE_EQ(*got.tau_used, *want.tau);
        }
      }
    }
  }
}

TEST(Strategy, FilteredMixSizeIdentity) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + rng() % 500;
    std::vector<RecordId> ids(n);
    std::iota(ids.begin(), ids.end(), RecordId{0});
    std::vector<float> raw(n), syn(n);
    for (auto& x : raw) x = static_cast<float>(rng() % 1000) / 1000.0f;
    for (auto& x : syn) x = static_cast<float>(rng() % 1000) / 1000.0f;
    const auto in = inputs_of(ids, raw, syn);
    const auto set = apply_strategy(make(StrategyName::kRawTopPlusSynRestFiltered, FilterSpec::top_fraction(30)), in);
    const auto top = top_fraction(*in.raw_scores, 30);
    std::size_t rest = 0;
    if (top.tau)
      for (std::size_t i = 0; i < n; ++i) rest += !top.mask.test(i) && syn[i] >= *top.tau;
    EXPECT_EQ(set.size(), top.mask.count() + rest);
    // Partition identity for the raw top set.
    const auto complement = apply_strategy(make(StrategyName::kRawTopPlusSynRest, FilterSpec::top_fraction(30)), in);
    EXPECT_EQ(complement.size(), n);
  }
}

TEST(Strategy, MissingInputsAreDataErrors) {
  auto in = ten_records();
  in.syn_scores.reset();
  EXPECT_THROW(apply_strategy(make(StrategyName::kSynTop, FilterSpec::top_fraction(30)), in), DataError);
  auto in2 = ten_records();
  in2.syn_variant[4].reset();
  EXPECT_THROW(apply_strategy(make(StrategyName::kSynAll), in2), DataError);
  auto spec = make(StrategyName::kRawAll);
  spec.in1k_intersect = true;
  EXPECT_THROW(apply_strategy(spec, ten_records()), DataError);
}

TEST(StrategySpec, ValidationNamesTheField) {
  auto field_of = [](const StrategySpec& s) {
    try {
      s.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of(make(StrategyName::kRawTop)), "p");
  EXPECT_EQ(field_of(make(StrategyName::kRawTop, FilterSpec::top_fraction(150))), "p");
  EXPECT_EQ(field_of(make(StrategyName::kRawTop, FilterSpec::top_fraction(0))), "p");
  EXPECT_EQ(field_of(make(StrategyName::kRawAll, FilterSpec::top_fraction(10))), "p");
  StrategySpec no_src = make(StrategyName::kSynTop, FilterSpec::top_fraction(10));
  no_src.syn_source.clear();
  EXPECT_EQ(field_of(no_src), "syn_source");
  EXPECT_EQ(field_of(make(StrategyName::kRawTop, FilterSpec::threshold(0.28))), "<none>");
  EXPECT_THROW(parse_strategy_name("raw_bottom"), ConfigError);
  for (auto n : all_strategy_names()) EXPECT_EQ(parse_strategy_name(to_string(n)), n);
  EXPECT_EQ(all_strategy_names().size(), 11u);
}

TEST(StrategySpec, JsonRoundTripAndLabels) {
  StrategySpec s = make(StrategyName::kSynTop, FilterSpec::threshold(0.28));
  s.in1k_intersect = true;
  s.cluster_params = ClusterParams{8, 10, 0.0, 3};
  EXPECT_EQ(strategy_from_json(to_json(s)), s);
  EXPECT_EQ(s.label(), "syn_top(tau>=0.28)+in1k");
  EXPECT_EQ(make(StrategyName::kRawTop, FilterSpec::top_fraction(30)).label(), "raw_top(30)");
  const auto list = strategies_from_json(nlohmann::json::parse(R"({"strategies":[{"name":"raw_all"}]})"));
  ASSERT_EQ(list.size(), 1u);
  try {
    strategies_from_json(nlohmann::json::parse(R"([{"name":"raw_all"},{"name":"raw_top","p":"x"}])"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "strategies[1].p");
  }
  EXPECT_THROW(strategy_from_json(nlohmann::json::parse(R"({"name":"raw_all","extra":1})")), ConfigError);
}

TEST(CuratedFile, RoundTrip) {
  TempDir dir;
  CuratedSet set = apply_strategy(make(StrategyName::kUnionTopRawTopSyn, FilterSpec::top_fraction(40)),
                                  ten_records());
  write_curated(dir / "c.jsonl", set);
  const CuratedSet back = read_curated(dir / "c.jsonl");
  EXPECT_EQ(back.entries, set.entries);
  EXPECT_EQ(back.tau_used, set.tau_used);
  EXPECT_EQ(back.tau_syn_used, set.tau_syn_used);
  EXPECT_EQ(back.provenance, set.provenance);
  const std::string text = testutil::slurp(dir / "c.jsonl");
  EXPECT_EQ(text.substr(0, 9), "{\"count\":");
  EXPECT_NE(text.find("{\"id\":0,\"cap\":\"raw\"}"), std::string::npos);
  EXPECT_EQ(curated_file_name(set.provenance), "curated.union_top_raw_top_syn.jsonl");
}

TEST(CuratedFile, CountMismatchIsFormatError) {
  TempDir dir;
  write_file(dir / "c.jsonl", "{\"count\":2,\"spec\":{\"name\":\"raw_all\"}}\n{\"id\":0,\"cap\":\"raw\"}\n");
  EXPECT_THROW(read_curated(dir / "c.jsonl"), FormatError);
}

TEST(PoolCuration, HandleWrapperMatchesInputsAndIn1kIsSubset) {
  TempDir dir;
  GenConfig cfg;
  cfg.num_records = 1500;
  cfg.records_per_shard = 400;
  generate_pool(cfg, dir / "p");
  const PoolHandle h = open_pool(dir / "p");
  ScoreTables tables;
  const auto spec = make(StrategyName::kRawTopPlusSynRestFiltered, FilterSpec::top_fraction(30));
  EXPECT_THROW(apply_strategy(h, spec, tables), DataError);
  ensure_score_tables(h, required_score_sources(h, spec), tables, 2);
  const auto plain = apply_strategy(h, spec, tables);

  std::vector<RecordId> ids;
  for (const auto& r : h.records()) ids.push_back(r.id);
  const auto want = oracle::strategy(spec.name, *spec.filter, ids, tables.at("raw").scores,
                                     tables.at("syn.blip2.0.75").scores, 0);
  EXPECT_EQ(entries_of(plain), want.entries);

  auto in1k_spec = spec;
  in1k_spec.in1k_intersect = true;
  const auto mask = in1k_cluster_mask(h, reference_embeddings(cfg, 5), ClusterParams{16, 20, 1e-4, 0});
  const auto in1k = apply_strategy(h, in1k_spec, tables, &mask);
  const auto a = entries_of(plain), b = entries_of(in1k);
  EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  EXPECT_LT(b.size(), a.size());
  EXPECT_GT(b.size(), 0u);
}
