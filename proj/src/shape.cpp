#include "attnshape/shape.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "attnshape/error.hpp"

namespace attnshape {

namespace {

using Wide = unsigned __int128;

struct Occurrences {
  std::span<const TagHit> hits;
  std::vector<std::uint64_t> cumulative;  // occurrences before hit k
  std::uint64_t total = 0;

  explicit Occurrences(std::span<const TagHit> h) : hits(h) {
    cumulative.reserve(hits.size());
    for (const TagHit& hit : hits) {
      cumulative.push_back(total);
      total += hit.multiplicity;
    }
  }

  // dataset_id of the k-th occurrence (0-based) in id order.
  std::uint64_t id_of(std::uint64_t k) const {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), k);
    return hits[static_cast<std::size_t>(it - cumulative.begin()) - 1]
        .dataset_id;
  }
};

void check_nondegenerate(std::span<const TagHit> hits, std::uint64_t total) {
  if (total < 2 || hits.size() < 2 ||
      hits.front().dataset_id == hits.back().dataset_id)
    throw DegenerateIntervalError(
        "degenerate interval: need topical occurrences on at least two "
        "distinct posts (found " +
        std::to_string(total) + " occurrence(s) on " +
        std::to_string(hits.size()) + " post(s))");
}

}  // namespace

bool ShapeVector::has_infinity() const {
  return std::any_of(values.begin(), values.end(),
                     [](double v) { return std::isinf(v); });
}

NormalizedPositions normalize_ids(std::span<const TagHit> hits) {
  std::uint64_t total = 0;
  for (const TagHit& h : hits) total += h.multiplicity;
  check_nondegenerate(hits, total);

  const std::uint64_t lo = hits.front().dataset_id;
  const auto span = static_cast<double>(hits.back().dataset_id - lo);
  NormalizedPositions out;
  out.xs.reserve(total);
  for (const TagHit& h : hits) {
    const double x = static_cast<double>(h.dataset_id - lo) / span;
    out.xs.insert(out.xs.end(), h.multiplicity, x);
  }
  return out;
}

std::vector<double> quantile_sample(const NormalizedPositions& positions,
                                    std::size_t n_quantiles) {
  if (n_quantiles == 0) throw ArgumentError("number of quantiles must be >= 1");
  const auto& xs = positions.xs;
  if (xs.size() < 2) throw DegenerateIntervalError("need >= 2 positions");

  const std::uint64_t m1 = xs.size() - 1;
  std::vector<double> q(n_quantiles + 1);
  for (std::size_t j = 0; j <= n_quantiles; ++j) {
    // h = j (m-1) / N split into whole and fractional parts exactly.
    const Wide scaled = static_cast<Wide>(j) * m1;
    const auto k = static_cast<std::size_t>(scaled / n_quantiles);
    const auto r = static_cast<std::uint64_t>(scaled % n_quantiles);
    q[j] = r == 0 ? xs[k]
                  : xs[k] + (static_cast<double>(r) /
                             static_cast<double>(n_quantiles)) *
                                (xs[k + 1] - xs[k]);
  }
  return q;
}

ShapeVector representation(std::span<const TagHit> hits,
                           std::size_t n_quantiles) {
  if (n_quantiles == 0) throw ArgumentError("number of quantiles must be >= 1");
  const Occurrences occ(hits);
  check_nondegenerate(hits, occ.total);

  const std::uint64_t lo = hits.front().dataset_id;
  const std::uint64_t span = hits.back().dataset_id - lo;
  const std::uint64_t m1 = occ.total - 1;
  const std::uint64_t n = n_quantiles;

  // Quantile j in units of 1 / (N * span): N*off[k] + r*(off[k+1] - off[k]).
  // Every term is an integer, so gaps are exact and only the final division
  // rounds.
  const auto scaled_quantile = [&](std::uint64_t j) -> Wide {
    const Wide h = static_cast<Wide>(j) * m1;
    const auto k = static_cast<std::uint64_t>(h / n);
    const auto r = static_cast<std::uint64_t>(h % n);
    const std::uint64_t off_k = occ.id_of(k) - lo;
    Wide q = static_cast<Wide>(n) * off_k;
    if (r != 0) q += static_cast<Wide>(r) * (occ.id_of(k + 1) - lo - off_k);
    return q;
  };

  ShapeVector v;
  v.n_quantiles = n_quantiles;
  v.topical_count = occ.total;
  v.span_posts = span;
  v.values.resize(n_quantiles);
  const auto whole = static_cast<double>(static_cast<Wide>(n) * span);
  Wide prev = scaled_quantile(0);
  for (std::uint64_t j = 1; j <= n; ++j) {
    const Wide next = scaled_quantile(j);
    const Wide gap = next - prev;
    v.values[j - 1] =
        gap == 0 ? kInfiniteRate : whole / static_cast<double>(gap);
    prev = next;
  }
  return v;
}

ShapeVector representation(const Corpus& corpus, const EventInterval& interval,
                           const RepresentationOptions& options) {
  if (interval.lo > interval.hi)
    throw ArgumentError("inverted interval bounds [" +
                        std::to_string(interval.lo) + ", " +
                        std::to_string(interval.hi) + "]");
  if (interval.hi >= corpus.size())
    throw ArgumentError("interval bound " + std::to_string(interval.hi) +
                        " outside corpus of " + std::to_string(corpus.size()) +
                        " posts");
  const auto hits = hits_in(corpus, interval.tag, interval.lo, interval.hi);
  std::uint64_t total = 0;
  for (const TagHit& h : hits) total += h.multiplicity;
  const bool below = total < options.min_count;
  if (below && options.strict)
    throw ThresholdError("interval '" + interval.label + "' of tag '" +
                         interval.tag + "' has " + std::to_string(total) +
                         " topical occurrences, below min_count=" +
                         std::to_string(options.min_count));

  ShapeVector v = representation(hits, options.n_quantiles);
  v.span_posts = interval.hi - interval.lo;
  v.below_min_count = below;
  return v;
}

double reciprocal_sum(const ShapeVector& v) {
  double sum = 0.0;
  for (double x : v.values)
    if (std::isfinite(x)) sum += 1.0 / x;
  return sum;
}

std::string format_rate(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

double parse_rate(std::string_view text) {
  if (text == "inf" || text == "+inf" || text == "Infinity") return kInfiniteRate;
  if (text == "-inf") return -kInfiniteRate;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ArgumentError("malformed number '" + std::string(text) + "'");
  return out;
}

}  // namespace attnshape
