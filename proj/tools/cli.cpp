#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>

#include "capforge/binary_io.hpp"
#include "capforge/curation.hpp"
#include "capforge/errors.hpp"
#include "capforge/kmeans.hpp"
#include "capforge/parallel.hpp"
#include "capforge/pool.hpp"
#include "capforge/poolgen.hpp"
#include "capforge/report.hpp"
#include "capforge/scoring.hpp"
#include "capforge/text_metrics.hpp"

namespace capforge {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::size_t workers = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

nlohmann::json read_json_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const FormatError& e) {
    throw ConfigError("", e.what());
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", path.filename().string() + ": " + e.what());
  }
}

// Uses a stored score sidecar when one exists, otherwise scores in memory.
void load_score_tables(const PoolHandle& handle, const std::vector<std::string>& sources,
                       const fs::path& scores_dir, std::size_t workers, ScoreTables& tables) {
  for (const auto& s : sources) {
    if (tables.count(s)) continue;
    const fs::path file = scores_dir / score_file_name(s);
    if (fs::exists(file)) {
      ScoreTable t = read_scores_file(file, s);
      if (t.size() != handle.size())
        throw DataError(file.filename().string() + " holds " + std::to_string(t.size()) +
                        " scores for " + std::to_string(handle.size()) + " records");
      tables.emplace(s, std::move(t));
    } else {
      tables.emplace(s, score_pool(handle, s, workers));
    }
  }
}

fs::path curated_output_path(const fs::path& out, const StrategySpec& spec) {
  if (fs::is_directory(out)) return out / curated_file_name(spec);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  return out;
}

struct ClusterOptions {
  std::string refs;
  std::uint32_t k = ClusterParams{}.k;
  std::uint32_t max_iters = ClusterParams{}.max_iters;
  double tol = ClusterParams{}.tol;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--in1k-refs", refs, "EMB1 file of reference image embeddings");
    cmd->add_option("--clusters", k, "k-means cluster count for the in1k filter")->check(CLI::PositiveNumber);
    cmd->add_option("--kmeans-iters", max_iters, "maximum Lloyd iterations")->check(CLI::PositiveNumber);
    cmd->add_option("--kmeans-tol", tol, "relative SSE improvement threshold")->check(CLI::NonNegativeNumber);
  }
  ClusterParams params(const Globals& g) const { return {k, max_iters, tol, g.seed}; }
};

struct LexiconOptions {
  std::string vocab;
  std::string nouns;
  std::size_t sample = kDefaultMetricSample;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--vocab", vocab, "visual vocabulary word list (default: bundled)");
    cmd->add_option("--nouns", nouns, "noun lexicon word list (default: bundled)");
    cmd->add_option("--sample", sample, "maximum metric sample size")->check(CLI::PositiveNumber);
  }
};

MetricConfig metric_config(const LexiconOptions& lex, const ClusterOptions& clusters, const Globals& g) {
  MetricConfig cfg;
  if (!lex.vocab.empty()) cfg.visual_vocab = load_lexicon(lex.vocab);
  if (!lex.nouns.empty()) cfg.nouns = load_lexicon(lex.nouns);
  cfg.max_sample = lex.sample;
  cfg.seed = g.seed;
  cfg.workers = g.workers;
  if (!clusters.refs.empty()) cfg.in1k_references = read_embeddings_file(clusters.refs, "reference");
  cfg.default_cluster_params = clusters.params(g);
  return cfg;
}

std::vector<std::uint64_t> parse_list(const std::string& text, const std::string& field) {
  std::vector<std::uint64_t> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      values.push_back(static_cast<std::uint64_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(field, "'" + item + "' is not a nonnegative integer");
    }
    pos = comma + 1;
  }
  return values;
}

CuratedSet curate(const PoolHandle& handle, const StrategySpec& spec, const ClusterOptions& clusters,
                  const std::string& scores_dir, const Globals& g) {
  std::optional<SelectionMask> mask;
  if (spec.in1k_intersect) {
    if (clusters.refs.empty()) throw ConfigError("in1k-refs", "required with --in1k");
    const auto refs = read_embeddings_file(clusters.refs, "reference");
    mask = in1k_cluster_mask(handle, refs, spec.cluster_params.value_or(clusters.params(g)), g.workers);
  }
  ScoreTables tables;
  load_score_tables(handle, required_score_sources(handle, spec),
                    scores_dir.empty() ? handle.path() : fs::path(scores_dir), g.workers, tables);
  return apply_strategy(handle, spec, tables, mask ? &*mask : nullptr);
}

void print_tau(std::ostream& out, const CuratedSet& set) {
  out << "entries: " << set.size() << "\n";
  out << "tau_used: ";
  if (set.tau_used) out << nlohmann::json(*set.tau_used).dump(); else out << "none";
  out << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"capforge: curation of image-text pools over precomputed embeddings"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--workers", g.workers, "worker threads (default: CAPFORGE_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", g.seed, "seed for every seeded operation");

  std::function<int()> action;

  // gen
  std::string gen_config, gen_out, gen_lexicon_out, gen_refs_out;
  std::size_t gen_num_refs = 100;
  auto* gen = app.add_subcommand("gen", "generate a synthetic pool");
  gen->add_option("--config", gen_config, "generator config JSON")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "output pool directory")->required();
  gen->add_option("--lexicon-out", gen_lexicon_out, "write the concept word list here");
  gen->add_option("--refs-out", gen_refs_out, "write reference embeddings (EMB1) here");
  gen->add_option("--num-refs", gen_num_refs, "reference embeddings to write")->check(CLI::PositiveNumber);
  gen->callback([&] {
    action = [&] {
      GenConfig cfg = gen_config.empty() ? GenConfig{} : gen_config_from_json(read_json_config(gen_config));
      if (g.seed_given) cfg.seed = g.seed;
      const PoolManifest m = generate_pool(cfg, gen_out, g.workers);
      if (!gen_lexicon_out.empty()) {
        std::string text;
        for (const auto& w : concept_words(cfg)) text += w + "\n";
        write_file(gen_lexicon_out, text);
      }
      if (!gen_refs_out.empty()) write_embeddings_file(gen_refs_out, reference_embeddings(cfg, gen_num_refs));
      out << "wrote " << m.num_records << " records in " << m.num_shards << " shards to " << gen_out << "\n";
      return kExitOk;
    };
  });

  // validate
  std::string validate_pool_path;
  auto* validate = app.add_subcommand("validate", "check pool invariants");
  validate->add_option("pool", validate_pool_path, "pool directory")->required();
  validate->callback([&] {
    action = [&] {
      const PoolHandle h = open_pool(validate_pool_path);
      const ValidationReport report = validate_pool(h);
      for (const auto& f : report.findings) {
        out << to_string(f.kind);
        if (f.record_index) out << " row=" << *f.record_index;
        if (!f.source.empty()) out << " source=" << f.source;
        out << ": " << f.message << "\n";
      }
      out << (report.clean() ? "ok" : "invalid") << ": " << h.size() << " records, "
          << report.findings.size() << " findings\n";
      return report.clean() ? kExitOk : kExitData;
    };
  });

  // score
  std::string score_pool_path, score_source = std::string(kRawSource), score_out;
  auto* score = app.add_subcommand("score", "write a score sidecar for one caption source");
  score->add_option("--pool", score_pool_path, "pool directory")->required();
  score->add_option("--source", score_source, "\"raw\", a synthetic source label or captioner name");
  score->add_option("--out", score_out, "sidecar path (default: <pool>/<source>.scores.f32)");
  score->callback([&] {
    action = [&] {
      const PoolHandle h = open_pool(score_pool_path);
      const std::string label =
          score_source == kRawSource ? score_source : resolve_syn_source(h, score_source);
      const ScoreTable t = score_pool(h, label, g.workers);
      const fs::path path = score_out.empty() ? h.path() / score_file_name(label) : fs::path(score_out);
      write_scores_file(path, t);
      out << "scored " << t.size() << " records (" << label << ") -> " << path.string() << "\n";
      return kExitOk;
    };
  });

  // filter / mix share curation flags.
  struct CurateOptions {
    std::string pool, out, scores_dir, syn_source, strategy, source = std::string(kRawSource);
    double p = 0.0, tau = 0.0;
    bool in1k = false;
    CLI::Option* p_opt = nullptr;
    CLI::Option* tau_opt = nullptr;
    ClusterOptions clusters;
  };
  auto add_curate_flags = [](CLI::App* cmd, CurateOptions& o) {
    cmd->add_option("--pool", o.pool, "pool directory")->required();
    cmd->add_option("--out", o.out, "curated JSONL path or directory")->required();
    cmd->add_option("--scores-dir", o.scores_dir, "directory holding score sidecars (default: pool)");
    o.p_opt = cmd->add_option("--p", o.p, "top percentage in (0, 100]")->check(CLI::Range(0.0, 100.0));
    o.tau_opt = cmd->add_option("--tau", o.tau, "score threshold (inclusive)");
    o.p_opt->excludes(o.tau_opt);
    cmd->add_flag("--in1k", o.in1k, "intersect with the in1k cluster filter");
    o.clusters.add_to(cmd);
  };
  auto filter_of = [](const CurateOptions& o) -> std::optional<FilterSpec> {
    if (o.p_opt->count()) return FilterSpec::top_fraction(o.p);
    if (o.tau_opt->count()) return FilterSpec::threshold(o.tau);
    return std::nullopt;
  };

  CurateOptions filter_opts;
  auto* filter = app.add_subcommand("filter", "select the top p% (or score >= tau) of one caption source");
  add_curate_flags(filter, filter_opts);
  filter->add_option("--source", filter_opts.source, "\"raw\" or a synthetic source");
  filter->callback([&] {
    action = [&] {
      const PoolHandle h = open_pool(filter_opts.pool);
      StrategySpec spec;
      if (filter_opts.source == kRawSource) {
        spec.name = StrategyName::kRawTop;
      } else {
        spec.name = StrategyName::kSynTop;
        spec.syn_source = filter_opts.source;
      }
      spec.filter = filter_of(filter_opts);
      spec.in1k_intersect = filter_opts.in1k;
      spec.validate();
      const CuratedSet set = curate(h, spec, filter_opts.clusters, filter_opts.scores_dir, g);
      const fs::path path = curated_output_path(filter_opts.out, spec);
      write_curated(path, set);
      print_tau(out, set);
      return kExitOk;
    };
  });

  CurateOptions mix_opts;
  auto* mix = app.add_subcommand("mix", "apply a filtering / caption-mixing strategy");
  add_curate_flags(mix, mix_opts);
  mix->add_option("--strategy", mix_opts.strategy, "strategy name")->required();
  mix->add_option("--syn-source", mix_opts.syn_source, "synthetic caption source");
  mix->callback([&] {
    action = [&] {
      StrategySpec spec;
      spec.name = parse_strategy_name(mix_opts.strategy);
      spec.filter = filter_of(mix_opts);
      spec.syn_source = mix_opts.syn_source;
      spec.in1k_intersect = mix_opts.in1k;
      spec.validate();
      const PoolHandle h = open_pool(mix_opts.pool);
      const CuratedSet set = curate(h, spec, mix_opts.clusters, mix_opts.scores_dir, g);
      const fs::path path = curated_output_path(mix_opts.out, spec);
      write_curated(path, set);
      print_tau(out, set);
      return kExitOk;
    };
  });

  // materialize
  std::string mat_pool, mat_curated, mat_out;
  auto* mat = app.add_subcommand("materialize", "write a curated set as a new pool");
  mat->add_option("--pool", mat_pool, "source pool directory")->required();
  mat->add_option("--curated", mat_curated, "curated JSONL")->required()->check(CLI::ExistingFile);
  mat->add_option("--out", mat_out, "output pool directory")->required();
  mat->callback([&] {
    action = [&] {
      const PoolHandle h = open_pool(mat_pool);
      const PoolManifest m = materialize(h, read_curated(mat_curated), mat_out);
      out << "materialized " << m.num_records << " records to " << mat_out << "\n";
      return kExitOk;
    };
  });

  // metrics
  std::string met_pool, met_curated, met_out, met_sizes;
  LexiconOptions met_lex;
  auto* metrics = app.add_subcommand("metrics", "caption quality metrics of a curated set");
  metrics->add_option("--pool", met_pool, "pool directory")->required();
  metrics->add_option("--curated", met_curated, "curated JSONL")->required()->check(CLI::ExistingFile);
  metrics->add_option("--out", met_out, "output JSON (default: stdout)");
  metrics->add_option("--sizes", met_sizes, "comma-separated subset sizes for a diversity curve");
  met_lex.add_to(metrics);
  metrics->callback([&] {
    action = [&] {
      const MetricConfig cfg = metric_config(met_lex, ClusterOptions{}, g);
      const PoolHandle h = open_pool(met_pool);
      const CuratedSet set = read_curated(met_curated);
      ScoreTables tables;
      nlohmann::ordered_json j;
      j["report"] = report_row_json(evaluate_curated(h, set, tables, cfg));
      if (!met_sizes.empty()) {
        const auto sizes64 = parse_list(met_sizes, "sizes");
        const std::vector<std::size_t> sizes(sizes64.begin(), sizes64.end());
        j["diversity_curve"] = nlohmann::ordered_json::array();
        for (const auto& pt : diversity_curve(h, set, sizes, g.seed, cfg.nouns)) {
          nlohmann::ordered_json row;
          row["subset_size"] = pt.subset_size;
          row["unique_trigrams"] = pt.unique_trigrams;
          row["unique_nouns"] = pt.unique_nouns;
          j["diversity_curve"].push_back(row);
        }
      }
      const std::string text = j.dump(2) + "\n";
      if (met_out.empty()) out << text; else write_file(met_out, text);
      return kExitOk;
    };
  });

  // report
  std::string rep_pool, rep_strategies, rep_out;
  LexiconOptions rep_lex;
  ClusterOptions rep_clusters;
  auto* report = app.add_subcommand("report", "noise-vs-diversity report over strategies");
  report->add_option("--pool", rep_pool, "pool directory")->required();
  report->add_option("--strategies", rep_strategies, "strategy list JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--out", rep_out, "output directory")->required();
  rep_lex.add_to(report);
  rep_clusters.add_to(report);
  report->callback([&] {
    action = [&] {
      const auto specs = strategies_from_json(read_json_config(rep_strategies));
      const MetricConfig cfg = metric_config(rep_lex, rep_clusters, g);
      const auto rows = run_report(rep_pool, specs, cfg, rep_out);
      out << "report: " << rows.size() << " rows -> " << rep_out << "\n";
      return kExitOk;
    };
  });

  // sweep
  std::string sw_config, sw_scales, sw_strategies, sw_out;
  LexiconOptions sw_lex;
  ClusterOptions sw_clusters;
  auto* sweep = app.add_subcommand("sweep", "evaluate strategies across generated pool scales");
  sweep->add_option("--config", sw_config, "generator config template JSON")->check(CLI::ExistingFile);
  sweep->add_option("--scales", sw_scales, "comma-separated pool sizes")->required();
  sweep->add_option("--strategies", sw_strategies, "strategy list JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sw_out, "work directory")->required();
  sw_lex.add_to(sweep);
  sw_clusters.add_to(sweep);
  sweep->callback([&] {
    action = [&] {
      GenConfig tmpl = sw_config.empty() ? GenConfig{} : gen_config_from_json(read_json_config(sw_config));
      if (g.seed_given) tmpl.seed = g.seed;
      const auto scales = parse_list(sw_scales, "scales");
      const auto specs = strategies_from_json(read_json_config(sw_strategies));
      MetricConfig cfg = metric_config(sw_lex, sw_clusters, g);
      const SweepResult result = run_sweep(tmpl, scales, specs, cfg, sw_out);
      out << "sweep: " << result.rows.size() << " rows -> " << (fs::path(sw_out) / "sweep.csv").string() << "\n";
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  g.seed_given = seed_opt->count() > 0;
  g.workers = resolve_workers(g.workers);
  try {
    return action ? action() : kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"capforge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace capforge
