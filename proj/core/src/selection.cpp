#include <algorithm>
#include <cmath>
#include <numeric>

#include "capforge/curation.hpp"
#include "capforge/errors.hpp"
#include "capforge/scoring.hpp"

namespace capforge {

namespace {
__extension__ typedef unsigned __int128 uint128;
}  // namespace

std::vector<std::size_t> SelectionMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      out.push_back(w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits)));
      bits &= bits - 1;
    }
  }
  return out;
}

// floor(p * n / 100), exact: p = m * 2^-s with integer m, so the count is
// floor(floor(m * n / 2^s) / 100).
std::size_t top_count(double p, std::size_t n) {
  int exp = 0;
  const double frac = std::frexp(p, &exp);
  const auto m = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  const int shift = 53 - exp;
  const uint128 prod = static_cast<uint128>(m) * n;
  if (shift >= 128) return 0;
  const uint128 scaled = shift >= 0 ? prod >> shift : prod << -shift;
  return static_cast<std::size_t>(scaled / 100);
}

TopSelection top_fraction(std::span<const float> scores, std::span<const RecordId> ids, double p) {
  if (!(p > 0.0 && p <= 100.0)) throw DomainError("top_fraction: p must lie in (0, 100]");
  if (ids.size() != scores.size()) throw DomainError("top_fraction: ids and scores differ in length");
  const std::size_t n = scores.size();
  const std::size_t k = top_count(p, n);

  TopSelection out{SelectionMask(n), std::nullopt};
  if (k == 0) return out;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Strict total order: higher score first, then lower id.
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  if (k < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                              order.end(), before);
  float tau = scores[order[k - 1]];
  if (k == n) tau = *std::min_element(scores.begin(), scores.end());
  for (std::size_t i = 0; i < k; ++i) out.mask.set(order[i]);
  out.tau = tau;
  return out;
}

TopSelection top_fraction(const ScoreTable& scores, double p) {
  std::vector<RecordId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), RecordId{0});
  return top_fraction(scores.scores, ids, p);
}

SelectionMask threshold_filter(std::span<const float> scores, double tau) {
  SelectionMask mask(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (static_cast<double>(scores[i]) >= tau) mask.set(i);
  return mask;
}

SelectionMask threshold_filter(const ScoreTable& scores, double tau) {
  return threshold_filter(scores.scores, tau);
}

TopSelection select_top(std::span<const float> scores, std::span<const RecordId> ids,
                        const FilterSpec& filter) {
  if (filter.kind == FilterSpec::Kind::kTopFraction) return top_fraction(scores, ids, filter.p);
  return {threshold_filter(scores, filter.tau), filter.tau};
}

}  // namespace capforge
