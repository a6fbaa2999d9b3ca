#include <gtest/gtest.h>

#include <sstream>

#include "capforge/errors.hpp"
#include "capforge/report.hpp"
#include "capforge/scoring.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace capforge;
using testutil::TempDir;

namespace {

StrategySpec spec(StrategyName name, std::optional<double> p = std::nullopt) {
  StrategySpec s;
  s.name = name;
  if (p) s.filter = FilterSpec::top_fraction(*p);
  if (needs_syn_source(name)) s.syn_source = "blip2";
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

class ReportTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    GenConfig cfg;
    cfg.num_records = 10000;
    cfg.records_per_shard = 2500;
    generate_pool(cfg, dir_->path() / "pool", 2);
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::filesystem::path pool() { return dir_->path() / "pool"; }
  static TempDir* dir_;
};
TempDir* ReportTest::dir_ = nullptr;

}  // namespace

TEST_F(ReportTest, RawAllMeanCosineCalibrated) {
  const PoolHandle h = open_pool(pool());
  const auto rows = report_pool(h, std::vector<StrategySpec>{spec(StrategyName::kRawAll)}, MetricConfig{});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_cosine, 0.208, 0.005);
  EXPECT_EQ(rows[0].entry_count, 10000u);
  EXPECT_FALSE(rows[0].tau_used.has_value());
  EXPECT_EQ(rows[0].sample_size, 10000u);
}

TEST_F(ReportTest, RowValuesMatchDirectComputation) {
  const PoolHandle h = open_pool(pool());
  MetricConfig cfg;
  cfg.max_sample = 1500;
  cfg.seed = 4;
  const auto s = spec(StrategyName::kRawTopPlusSynRestFiltered, 30);
  const auto rows = report_pool(h, std::vector<StrategySpec>{s}, cfg);
  const auto& row = rows.at(0);

  ScoreTables tables;
  ensure_score_tables(h, required_score_sources(h, s), tables);
  const CuratedSet set = apply_strategy(h, s, tables);
  ASSERT_EQ(row.entry_count, set.size());
  double cos_sum = 0, clip_sum = 0;
  for (const auto& e : set.entries) {
    const std::size_t i = *h.index_of(e.id);
    const std::string src = h.caption_source(i, e.caption);
    const double c = oracle::cos(h.embeddings("image").row(i).data(), h.embeddings(src).row(i).data(), 64);
    cos_sum += c;
    clip_sum += 2.5 * std::max(c, 0.0);
  }
  EXPECT_NEAR(row.mean_cosine, cos_sum / set.size(), 1e-6);
  EXPECT_NEAR(row.mean_clip_s, clip_sum / set.size(), 1e-6);
  EXPECT_GE(row.mean_cosine, *row.tau_used);
  EXPECT_EQ(row.sample_size, 1500u);
  EXPECT_EQ(row.seed, 4u);

  const auto sample = sample_subset(set, 1500, 4);
  const auto caps = curated_captions(h, sample);
  EXPECT_EQ(row.unique_trigrams, oracle::trigram_set(caps).size());
  double words = 0, ground = 0;
  for (const auto& c : caps) {
    const auto t = oracle::tokens(c);
    words += t.size();
    std::size_t hits = 0;
    for (const auto& w : t) hits += bundled_visual_vocab().contains(w);
    ground += t.empty() ? 0.0 : double(hits) / t.size();
  }
  EXPECT_NEAR(row.mean_word_count, words / 1500, 1e-9);
  EXPECT_NEAR(row.mean_grounding_ratio, ground / 1500, 1e-9);
}

TEST_F(ReportTest, FilesAreDeterministicAndValueIdentical) {
  TempDir out;
  const std::vector<StrategySpec> specs{spec(StrategyName::kRawAll), spec(StrategyName::kRawTop, 30),
                                        spec(StrategyName::kSynTop, 25), spec(StrategyName::kUnionTopRawTopSyn, 30)};
  MetricConfig cfg;
  cfg.max_sample = 3000;
  run_report(pool(), specs, cfg, out / "a");
  cfg.workers = 4;
  run_report(pool(), specs, cfg, out / "b");
  const std::string json = testutil::slurp(out / "a" / "report.json");
  EXPECT_EQ(json, testutil::slurp(out / "b" / "report.json"));
  const std::string csv = testutil::slurp(out / "a" / "report.csv");
  EXPECT_EQ(csv, testutil::slurp(out / "b" / "report.csv"));
  EXPECT_EQ(csv.find('\r'), std::string::npos);

  const auto j = nlohmann::json::parse(json);
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  const auto header = split(line, ',');
  EXPECT_EQ(header, report_columns());
  std::size_t r = 0;
  while (std::getline(ss, line)) {
    const auto cells = split(line, ',');
    ASSERT_EQ(cells.size(), header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto& v = j.at(r).at(header[c]);
      const std::string want = v.is_null() ? "" : v.is_string() ? v.get<std::string>() : v.dump();
      EXPECT_EQ(cells[c], want) << header[c];
    }
    ++r;
  }
  EXPECT_EQ(r, specs.size());
}

TEST_F(ReportTest, EmptyStrategyListWritesHeaders) {
  TempDir out;
  const auto rows = run_report(pool(), std::vector<StrategySpec>{}, MetricConfig{}, out.path());
  EXPECT_TRUE(rows.empty());
  EXPECT_EQ(nlohmann::json::parse(testutil::slurp(out / "report.json")), nlohmann::json::array());
  const std::string csv = testutil::slurp(out / "report.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.substr(0, 9), "strategy,");
}

TEST_F(ReportTest, In1kWithoutReferencesNamesTheField) {
  auto s = spec(StrategyName::kRawAll);
  s.in1k_intersect = true;
  try {
    report_pool(open_pool(pool()), std::vector<StrategySpec>{s}, MetricConfig{});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "in1k_intersect");
  }
}

TEST(Sweep, ScalesAreValidated) {
  TempDir dir;
  const std::vector<StrategySpec> specs{spec(StrategyName::kRawAll)};
  for (const std::vector<std::uint64_t>& bad :
       {std::vector<std::uint64_t>{}, {0, 10}, {100, 100}, {200, 100}, {kMaxGeneratedRecords + 1}}) {
    try {
      run_sweep(GenConfig{}, bad, specs, MetricConfig{}, dir.path());
      FAIL();
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), "scales");
    }
  }
}

TEST(Sweep, SingleScaleReducesToReportAndTrigramsGrow) {
  TempDir dir;
  const std::vector<StrategySpec> specs{spec(StrategyName::kRawAll), spec(StrategyName::kSynAll)};
  const auto one = run_sweep(GenConfig{}, std::vector<std::uint64_t>{800}, specs, MetricConfig{}, dir / "one");
  GenConfig g;
  g.num_records = 800;
  generate_pool(g, dir / "direct");
  const auto rows = report_pool(open_pool(dir / "direct"), specs, MetricConfig{});
  ASSERT_EQ(one.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(one.rows[i].report, rows[i]);

  const auto many = run_sweep(GenConfig{}, std::vector<std::uint64_t>{300, 1000, 3000}, specs, MetricConfig{},
                              dir / "many");
  std::vector<double> raw_cos;
  std::size_t prev = 0;
  for (const auto& row : many.rows) {
    if (row.report.strategy != "raw_all") continue;
    EXPECT_GT(row.report.unique_trigrams, prev);
    prev = row.report.unique_trigrams;
    raw_cos.push_back(row.report.mean_cosine);
  }
  EXPECT_LT(*std::max_element(raw_cos.begin(), raw_cos.end()) - *std::min_element(raw_cos.begin(), raw_cos.end()),
            0.01);
  const std::string csv = testutil::slurp(dir / "many" / "sweep.csv");
  EXPECT_EQ(csv, sweep_csv(many));
  EXPECT_EQ(csv.substr(0, 15), "scale,strategy,");
}
