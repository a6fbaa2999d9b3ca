#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "capforge/errors.hpp"
#include "capforge/strategy.hpp"

namespace capforge {

namespace {

constexpr std::array<std::pair<StrategyName, std::string_view>, 11> kNames{{
    {StrategyName::kRawAll, "raw_all"},
    {StrategyName::kSynAll, "syn_all"},
    {StrategyName::kSynBestVariantAll, "syn_best_variant_all"},
    {StrategyName::kRawTop, "raw_top"},
    {StrategyName::kSynTop, "syn_top"},
    {StrategyName::kSynOnRawTop, "syn_on_raw_top"},
    {StrategyName::kRawTopPlusSynRest, "raw_top_plus_syn_rest"},
    {StrategyName::kRawTopPlusSynRestFiltered, "raw_top_plus_syn_rest_filtered"},
    {StrategyName::kSynTopPlusRawRestFiltered, "syn_top_plus_raw_rest_filtered"},
    {StrategyName::kConcatTopPlusSynRestFiltered, "concat_top_plus_syn_rest_filtered"},
    {StrategyName::kUnionTopRawTopSyn, "union_top_raw_top_syn"},
}};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& field) {
  try {
    return j.at(field).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(field, std::string("invalid value: ") + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                    std::string_view prefix) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(std::string(prefix) + key, "unknown field");
  }
}

}  // namespace

std::string_view to_string(StrategyName name) {
  for (const auto& [n, s] : kNames)
    if (n == name) return s;
  return "unknown";
}

StrategyName parse_strategy_name(std::string_view name) {
  for (const auto& [n, s] : kNames)
    if (s == name) return n;
  throw ConfigError("name", "unknown strategy '" + std::string(name) + "'");
}

const std::vector<StrategyName>& all_strategy_names() {
  static const std::vector<StrategyName> names = [] {
    std::vector<StrategyName> v;
    for (const auto& [n, _] : kNames) v.push_back(n);
    return v;
  }();
  return names;
}

bool needs_filter(StrategyName name) {
  return to_string(name).find("top") != std::string_view::npos;
}

bool needs_syn_source(StrategyName name) {
  switch (name) {
    case StrategyName::kRawAll:
    case StrategyName::kRawTop:
    case StrategyName::kSynBestVariantAll:
      return false;
    default:
      return true;
  }
}

void StrategySpec::validate() const {
  if (needs_filter(name)) {
    if (!filter) throw ConfigError("p", "required for strategy " + std::string(to_string(name)));
    if (filter->kind == FilterSpec::Kind::kTopFraction) {
      if (!(filter->p > 0.0 && filter->p <= 100.0))
        throw ConfigError("p", "must lie in (0, 100], got " + format_number(filter->p));
    } else if (!std::isfinite(filter->tau)) {
      throw ConfigError("tau", "must be finite");
    }
  } else if (filter) {
    throw ConfigError(filter->kind == FilterSpec::Kind::kTopFraction ? "p" : "tau",
                      "not applicable to strategy " + std::string(to_string(name)));
  }
  if (needs_syn_source(name) && syn_source.empty())
    throw ConfigError("syn_source", "required for strategy " + std::string(to_string(name)));
  if (cluster_params) {
    if (cluster_params->k < 1) throw ConfigError("cluster_params.k", "must be >= 1");
    if (cluster_params->max_iters < 1)
      throw ConfigError("cluster_params.max_iters", "must be >= 1");
    if (!(cluster_params->tol >= 0.0)) throw ConfigError("cluster_params.tol", "must be >= 0");
  }
}

std::string StrategySpec::label() const {
  std::string out(to_string(name));
  if (filter) {
    out += filter->kind == FilterSpec::Kind::kTopFraction
               ? "(" + format_number(filter->p) + ")"
               : "(tau>=" + format_number(filter->tau) + ")";
  }
  if (in1k_intersect) out += "+in1k";
  return out;
}

nlohmann::json to_json(const StrategySpec& spec) {
  nlohmann::json j;
  j["name"] = to_string(spec.name);
  if (spec.filter) {
    if (spec.filter->kind == FilterSpec::Kind::kTopFraction)
      j["p"] = spec.filter->p;
    else
      j["tau"] = spec.filter->tau;
  }
  if (!spec.syn_source.empty()) j["syn_source"] = spec.syn_source;
  j["in1k_intersect"] = spec.in1k_intersect;
  if (spec.cluster_params) {
    j["cluster_params"] = {{"k", spec.cluster_params->k},
                           {"max_iters", spec.cluster_params->max_iters},
                           {"tol", spec.cluster_params->tol},
                           {"seed", spec.cluster_params->seed}};
  }
  return j;
}

StrategySpec strategy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("", "strategy spec must be a JSON object");
  reject_unknown(j, {"name", "p", "tau", "syn_source", "in1k_intersect", "cluster_params"}, "");

  StrategySpec spec;
  if (!j.contains("name")) throw ConfigError("name", "missing");
  spec.name = parse_strategy_name(get_field<std::string>(j, "name"));
  if (j.contains("p") && j.contains("tau"))
    throw ConfigError("tau", "p and tau are mutually exclusive");
  if (j.contains("p")) spec.filter = FilterSpec::top_fraction(get_field<double>(j, "p"));
  if (j.contains("tau")) spec.filter = FilterSpec::threshold(get_field<double>(j, "tau"));
  if (j.contains("syn_source")) spec.syn_source = get_field<std::string>(j, "syn_source");
  if (j.contains("in1k_intersect")) spec.in1k_intersect = get_field<bool>(j, "in1k_intersect");
  if (j.contains("cluster_params")) {
    const auto& c = j.at("cluster_params");
    if (!c.is_object()) throw ConfigError("cluster_params", "must be an object");
    reject_unknown(c, {"k", "max_iters", "tol", "seed"}, "cluster_params.");
    ClusterParams params;
    if (c.contains("k")) params.k = get_field<std::uint32_t>(c, "k");
    if (c.contains("max_iters")) params.max_iters = get_field<std::uint32_t>(c, "max_iters");
    if (c.contains("tol")) params.tol = get_field<double>(c, "tol");
    if (c.contains("seed")) params.seed = get_field<std::uint64_t>(c, "seed");
    spec.cluster_params = params;
  }
  spec.validate();
  return spec;
}

std::vector<StrategySpec> strategies_from_json(const nlohmann::json& j) {
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    reject_unknown(j, {"strategies"}, "");
    if (!j.contains("strategies")) throw ConfigError("strategies", "missing");
    list = &j.at("strategies");
  }
  if (!list->is_array()) throw ConfigError("strategies", "must be an array");
  std::vector<StrategySpec> specs;
  for (std::size_t i = 0; i < list->size(); ++i) {
    try {
      specs.push_back(strategy_from_json((*list)[i]));
    } catch (const ConfigError& e) {
      const std::string at = "strategies[" + std::to_string(i) + "]";
      throw ConfigError(e.field().empty() ? at : at + "." + e.field(),
                        e.detail());
    }
  }
  return specs;
}

}  // namespace capforge
