#include "capforge/curation.hpp"

#include <algorithm>

#include "capforge/errors.hpp"
#include "capforge/scoring.hpp"

namespace capforge {

namespace {

struct Placement {
  std::size_t index;
  CaptionChoice caption;
};

class Builder {
 public:
  explicit Builder(const CurationInputs& in) : in_(in) {}

  const ScoreTable& raw() const {
    if (!in_.raw_scores) throw DataError("strategy needs the \"raw\" score table");
    check_size(*in_.raw_scores);
    return *in_.raw_scores;
  }
  const ScoreTable& syn() const {
    if (!in_.syn_scores) throw DataError("strategy needs the synthetic score table");
    check_size(*in_.syn_scores);
    return *in_.syn_scores;
  }

  TopSelection top(const ScoreTable& t, const FilterSpec& f) const { return select_top(t.scores, in_.ids, f); }

  void add_raw(std::size_t i) { out_.push_back({i, CaptionChoice::raw()}); }
  void add_syn(std::size_t i) {
    if (i >= in_.syn_variant.size() || !in_.syn_variant[i])
      throw DataError("record " + std::to_string(in_.ids[i]) +
                      " has no caption from the selected synthetic source");
    out_.push_back({i, CaptionChoice::variant(*in_.syn_variant[i])});
  }
  void add_best(std::size_t i) {
    if (i < in_.best_variant.size() && in_.best_variant[i])
      out_.push_back({i, CaptionChoice::variant(*in_.best_variant[i])});
  }

  std::size_t size() const { return in_.ids.size(); }
  std::vector<Placement>& placements() { return out_; }

 private:
  void check_size(const ScoreTable& t) const {
    if (t.size() != in_.ids.size())
      throw DataError("score table " + t.source + " has " + std::to_string(t.size()) +
                      " entries for " + std::to_string(in_.ids.size()) + " records");
  }

  const CurationInputs& in_;
  std::vector<Placement> out_;
};

}  // namespace

CuratedSet apply_strategy(const StrategySpec& spec, const CurationInputs& inputs) {
  spec.validate();
  Builder b(inputs);
  CuratedSet set;
  set.provenance = spec;
  const std::size_t n = b.size();

  // Top set on one table, and the complement filtered on another at the
  // same threshold. An undefined tau leaves the complement empty.
  auto filtered_rest = [&](const TopSelection& top, const ScoreTable& other, auto&& place) {
    if (!top.tau) return;
    for (std::size_t i = 0; i < n; ++i)
      if (!top.mask.test(i) && static_cast<double>(other.scores[i]) >= *top.tau) place(i);
  };

  switch (spec.name) {
    case StrategyName::kRawAll:
      for (std::size_t i = 0; i < n; ++i) b.add_raw(i);
      break;
    case StrategyName::kSynAll:
      for (std::size_t i = 0; i < n; ++i) b.add_syn(i);
      break;
    case StrategyName::kSynBestVariantAll:
      for (std::size_t i = 0; i < n; ++i) b.add_best(i);
      break;
    case StrategyName::kRawTop: {
      const auto top = b.top(b.raw(), *spec.filter);
      for (std::size_t i : top.mask.indices()) b.add_raw(i);
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kSynTop: {
      const auto top = b.top(b.syn(), *spec.filter);
      for (std::size_t i : top.mask.indices()) b.add_syn(i);
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kSynOnRawTop: {
      const auto top = b.top(b.raw(), *spec.filter);
      for (std::size_t i : top.mask.indices()) b.add_syn(i);
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kRawTopPlusSynRest: {
      const auto top = b.top(b.raw(), *spec.filter);
      for (std::size_t i = 0; i < n; ++i) top.mask.test(i) ? b.add_raw(i) : b.add_syn(i);
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kRawTopPlusSynRestFiltered: {
      const auto top = b.top(b.raw(), *spec.filter);
      for (std::size_t i : top.mask.indices()) b.add_raw(i);
      filtered_rest(top, b.syn(), [&](std::size_t i) { b.add_syn(i); });
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kSynTopPlusRawRestFiltered: {
      const auto top = b.top(b.syn(), *spec.filter);
      for (std::size_t i : top.mask.indices()) b.add_syn(i);
      filtered_rest(top, b.raw(), [&](std::size_t i) { b.add_raw(i); });
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kConcatTopPlusSynRestFiltered: {
      const auto top = b.top(b.raw(), *spec.filter);
      for (std::size_t i : top.mask.indices()) {
        b.add_raw(i);
        b.add_syn(i);
      }
      filtered_rest(top, b.syn(), [&](std::size_t i) { b.add_syn(i); });
      set.tau_used = top.tau;
      break;
    }
    case StrategyName::kUnionTopRawTopSyn: {
      const auto raw_top = b.top(b.raw(), *spec.filter);
      const auto syn_top = b.top(b.syn(), *spec.filter);
      for (std::size_t i : raw_top.mask.indices()) b.add_raw(i);
      for (std::size_t i : syn_top.mask.indices()) b.add_syn(i);
      set.tau_used = raw_top.tau;
      set.tau_syn_used = syn_top.tau;
      break;
    }
  }

  const SelectionMask* keep = nullptr;
  if (spec.in1k_intersect) {
    if (!inputs.in1k_mask) throw DataError("strategy requests in1k_intersect but no in1k mask was given");
    if (inputs.in1k_mask->size() != n) throw DataError("in1k mask size does not match the pool");
    keep = &*inputs.in1k_mask;
  }

  set.entries.reserve(b.placements().size());
  for (const auto& p : b.placements()) {
    if (keep && !keep->test(p.index)) continue;
    set.entries.push_back({inputs.ids[p.index], p.caption});
  }
  set.normalize();
  return set;
}

std::vector<std::string> required_score_sources(const PoolHandle& handle, const StrategySpec& spec) {
  std::vector<std::string> sources;
  switch (spec.name) {
    case StrategyName::kRawAll:
    case StrategyName::kSynAll:
      break;
    case StrategyName::kSynBestVariantAll:
      for (const auto& s : handle.manifest().embedding_sources)
        if (s.starts_with("syn.")) sources.push_back(s);
      break;
    case StrategyName::kRawTop:
      sources.emplace_back(kRawSource);
      break;
    case StrategyName::kSynTop:
      sources.push_back(resolve_syn_source(handle, spec.syn_source));
      break;
    default:
      sources.emplace_back(kRawSource);
      sources.push_back(resolve_syn_source(handle, spec.syn_source));
      break;
  }
  return sources;
}

void ensure_score_tables(const PoolHandle& handle, std::span<const std::string> sources,
                         ScoreTables& tables, std::size_t workers) {
  for (const auto& s : sources)
    if (tables.find(s) == tables.end()) tables.emplace(s, score_pool(handle, s, workers));
}

CuratedSet apply_strategy(const PoolHandle& handle, const StrategySpec& spec,
                          const ScoreTables& tables, const SelectionMask* in1k_mask) {
  spec.validate();
  CurationInputs in;
  const auto records = handle.records();
  in.ids.reserve(records.size());
  for (const auto& r : records) in.ids.push_back(r.id);

  auto table = [&](const std::string& source) -> const ScoreTable& {
    const auto it = tables.find(source);
    if (it == tables.end()) throw DataError("missing score table for source '" + source + "'");
    return it->second;
  };

  const bool uses_raw_scores = needs_filter(spec.name) && spec.name != StrategyName::kSynTop;
  if (uses_raw_scores) in.raw_scores = table(std::string(kRawSource));

  if (needs_syn_source(spec.name)) {
    const std::string label = resolve_syn_source(handle, spec.syn_source);
    if (needs_filter(spec.name) && spec.name != StrategyName::kRawTop &&
        spec.name != StrategyName::kSynOnRawTop)
      in.syn_scores = table(label);
    in.syn_variant.reserve(records.size());
    for (const auto& r : records) in.syn_variant.push_back(variant_index_for(r, label));
  }

  if (spec.name == StrategyName::kSynBestVariantAll) {
    in.best_variant.reserve(records.size());
    std::vector<float> scores;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& variants = records[i].synthetic_variants;
      if (variants.empty()) {
        in.best_variant.emplace_back();
        continue;
      }
      scores.clear();
      for (const auto& v : variants) scores.push_back(table(variant_source_label(v)).scores.at(i));
      in.best_variant.emplace_back(static_cast<std::uint32_t>(select_best_variant(scores)));
    }
  }

  if (in1k_mask) in.in1k_mask = *in1k_mask;
  return apply_strategy(spec, in);
}

}  // namespace capforge
