#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnshape/corpus.hpp"

namespace attnshape {

inline constexpr std::size_t kDefaultQuantiles = 50;
inline constexpr std::uint64_t kDefaultMinCount = 100;
inline constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

// Topical post positions rescaled so the first is 0 and the last is 1.
// Multi-use posts appear once per occurrence.
struct NormalizedPositions {
  std::vector<double> xs;
};

// Relative topical posting rate between consecutive quantiles of an interval.
// values[i] == kInfiniteRate where two quantiles fall on the same post.
struct ShapeVector {
  std::size_t n_quantiles = 0;
  std::vector<double> values;
  std::uint64_t topical_count = 0;
  std::uint64_t span_posts = 0;  // interval hi - lo
  bool below_min_count = false;

  bool has_infinity() const;
};

struct RepresentationOptions {
  std::size_t n_quantiles = kDefaultQuantiles;
  std::uint64_t min_count = kDefaultMinCount;
  // Below min_count: throw ThresholdError instead of flagging the vector.
  bool strict = false;
};

// Throws DegenerateIntervalError unless the hits cover >= 2 distinct posts.
NormalizedPositions normalize_ids(std::span<const TagHit> hits);

// Inverse-CDF samples at probabilities j/N, j = 0..N, interpolating linearly
// between order statistics (h = (j/N)(m-1)).
std::vector<double> quantile_sample(const NormalizedPositions& positions,
                                    std::size_t n_quantiles);

// Representation of the hits alone; positions are anchored at the first and
// last hit. span_posts is left at the hit span.
ShapeVector representation(std::span<const TagHit> hits,
                           std::size_t n_quantiles);

ShapeVector representation(const Corpus& corpus, const EventInterval& interval,
                           const RepresentationOptions& options = {});

// Sum of 1/values over finite entries; 1 for every valid vector.
double reciprocal_sum(const ShapeVector& v);

// Shortest round-trip decimal; "inf" for infinity.
std::string format_rate(double value);
double parse_rate(std::string_view text);

}  // namespace attnshape
