#include <cmath>
#include <unordered_map>

#include "capforge/pool.hpp"

namespace capforge {

std::string_view to_string(ValidationFinding::Kind kind) {
  switch (kind) {
    case ValidationFinding::Kind::kDuplicateId: return "duplicate_id";
    case ValidationFinding::Kind::kDimensionMismatch: return "dimension_mismatch";
    case ValidationFinding::Kind::kNonFinite: return "non_finite";
    case ValidationFinding::Kind::kZeroNorm: return "zero_norm";
    case ValidationFinding::Kind::kShardInconsistency: return "shard_inconsistency";
  }
  return "unknown";
}

std::size_t ValidationReport::count(ValidationFinding::Kind kind) const {
  std::size_t n = 0;
  for (const auto& f : findings) n += f.kind == kind;
  return n;
}

ValidationReport validate_pool(const PoolHandle& handle) {
  using Kind = ValidationFinding::Kind;
  ValidationReport report;
  const PoolManifest& m = handle.manifest();
  const auto records = handle.records();

  // Shard structure against the layout implied by the manifest.
  if (records.size() != m.num_records) {
    report.findings.push_back({Kind::kShardInconsistency, std::nullopt, {},
                               "manifest declares " + std::to_string(m.num_records) +
                                   " records, shards hold " + std::to_string(records.size())});
  }
  const auto expected = shard_layout(m.num_records, m.records_per_shard);
  if (expected.size() != m.num_shards) {
    report.findings.push_back({Kind::kShardInconsistency, std::nullopt, {},
                               "manifest declares " + std::to_string(m.num_shards) +
                                   " shards, layout requires " + std::to_string(expected.size())});
  }
  const auto& actual = handle.shards();
  for (std::size_t k = 0; k < actual.size(); ++k) {
    if (k >= expected.size() || actual[k] != expected[k]) {
      report.findings.push_back({Kind::kShardInconsistency, std::nullopt, {},
                                 "shard " + std::to_string(k) + " holds " +
                                     std::to_string(actual[k].size()) +
                                     " records, inconsistent with records_per_shard " +
                                     std::to_string(m.records_per_shard)});
    }
  }

  std::unordered_map<RecordId, std::size_t> first_seen;
  first_seen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [it, inserted] = first_seen.emplace(records[i].id, i);
    if (!inserted) {
      report.findings.push_back({Kind::kDuplicateId, i, {},
                                 "id " + std::to_string(records[i].id) + " also at index " +
                                     std::to_string(it->second)});
    }
  }

  for (const auto& source : m.embedding_sources) {
    if (!handle.has_source(source)) continue;
    const EmbeddingMatrix& e = handle.embeddings(source);
    if (e.dim != m.embedding_dim) {
      report.findings.push_back({Kind::kDimensionMismatch, std::nullopt, source,
                                 "dimension " + std::to_string(e.dim) + ", manifest says " +
                                     std::to_string(m.embedding_dim)});
    }
    if (e.dim == 0) continue;
    for (std::size_t i = 0; i < e.rows(); ++i) {
      bool finite = true;
      double norm2 = 0.0;
      for (float v : e.row(i)) {
        if (!std::isfinite(v)) finite = false;
        norm2 += static_cast<double>(v) * v;
      }
      if (!finite) {
        report.findings.push_back({Kind::kNonFinite, i, source, "non-finite entry"});
      } else if (norm2 == 0.0) {
        report.findings.push_back({Kind::kZeroNorm, i, source, "zero-norm vector"});
      }
    }
  }
  return report;
}

}  // namespace capforge
