#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attnshape/corpus.hpp"
#include "attnshape/rng.hpp"

namespace fixtures {

// Worked #betrayal example: 251 topical posts whose normalized positions
// reproduce the published prefix (0, 0.005, 0.006), suffix (0.981, 0.997, 1)
// and N = 25 rates (23.7, 36.8, 48.5, ..., 22.3, 10.2, 16.4). Every 10th order
// statistic lands on a quantile. Unpublished middle quantiles are spaced
// evenly.
struct Betrayal {
  static constexpr std::uint64_t kFirstId = 11207549;
  static constexpr std::uint64_t kLastId = 12523526;
  static constexpr std::size_t kTopical = 251;
  static constexpr std::size_t kQuantiles = 25;
};

// Normalized positions of the 251 occurrences.
inline std::vector<double> betrayal_positions() {
  const double span = double(Betrayal::kLastId - Betrayal::kFirstId);
  std::vector<double> q(26);
  q[0] = 0.0;
  q[1] = 1 / 23.7;
  q[2] = q[1] + 1 / 36.8;
  q[3] = q[2] + 1 / 48.5;
  q[25] = 1.0;
  q[24] = 1.0 - 1 / 16.4;
  q[23] = q[24] - 1 / 10.2;
  q[22] = q[23] - 1 / 22.3;
  for (int j = 4; j <= 21; ++j) q[j] = q[3] + (q[22] - q[3]) * (j - 3) / 19.0;

  std::vector<double> x(Betrayal::kTopical);
  for (std::size_t j = 0; j <= 25; ++j) x[10 * j] = q[j];
  x[1] = double(11214100 - Betrayal::kFirstId) / span;
  x[2] = double(11215455 - Betrayal::kFirstId) / span;
  x[248] = double(12498903 - Betrayal::kFirstId) / span;
  x[249] = double(12519628 - Betrayal::kFirstId) / span;
  const auto fill = [&](std::size_t a, std::size_t b) {
    for (std::size_t k = a + 1; k < b; ++k)
      x[k] = x[a] + (x[b] - x[a]) * double(k - a) / double(b - a);
  };
  fill(2, 10);
  for (std::size_t j = 1; j < 24; ++j) fill(10 * j, 10 * (j + 1));
  fill(240, 248);
  return x;
}

// Dataset ids for a corpus whose topical span is `span` posts, starting at
// `first`. With the defaults these are the published ids.
inline std::vector<std::uint64_t> betrayal_ids(
    std::uint64_t first = Betrayal::kFirstId,
    std::uint64_t span = Betrayal::kLastId - Betrayal::kFirstId) {
  std::vector<std::uint64_t> ids;
  for (double x : betrayal_positions())
    ids.push_back(first + static_cast<std::uint64_t>(std::llround(x * double(span))));
  return ids;
}

inline std::vector<attnshape::TagHit> as_hits(const std::vector<std::uint64_t>& ids) {
  std::vector<attnshape::TagHit> hits;
  for (auto id : ids) hits.push_back({id, 1});
  return hits;
}

// Corpus with one post per id in [0, total), tagged `tag` at `ids`, one
// minute apart.
inline attnshape::Corpus corpus_with(const std::vector<std::uint64_t>& ids,
                                     std::uint64_t total,
                                     const std::string& tag = "betrayal") {
  attnshape::CorpusBuilder b;
  std::size_t next = 0;
  const std::vector<std::string> topical{tag}, background{"other"};
  for (std::uint64_t id = 0; id < total; ++id) {
    const bool hit = next < ids.size() && ids[next] == id;
    if (hit) ++next;
    b.add(static_cast<std::int64_t>(id) * 60'000, hit ? topical : background);
  }
  return std::move(b).finish();
}

// Scaled-down #betrayal corpus: 13160-post topical span after 50 background
// posts, 50 trailing posts.
inline attnshape::Corpus betrayal_corpus() {
  const auto ids = betrayal_ids(50, 13160);
  return corpus_with(ids, 50 + 13160 + 51);
}

// Random corpus for property tests: `posts` posts, topic "t" present with a
// bump-shaped probability and occasional multi-use posts.
inline attnshape::Corpus random_corpus(attnshape::Rng& rng, std::size_t posts,
                                       attnshape::TagMode mode) {
  attnshape::CorpusBuilder b(mode);
  const double centre = rng.uniform();
  const double width = 0.05 + 0.3 * rng.uniform();
  const double base = 0.02 + 0.1 * rng.uniform();
  std::int64_t ts = 1'600'000'000'000;
  for (std::size_t i = 0; i < posts; ++i) {
    const double x = double(i) / double(posts);
    const double p = base + 0.6 * std::exp(-std::pow((x - centre) / width, 2));
    std::vector<std::string> tags;
    if (rng.bernoulli(p)) {
      tags.push_back(rng.bernoulli(0.5) ? "#T" : "t");
      if (rng.bernoulli(0.1)) tags.push_back("t");
      if (rng.bernoulli(0.02)) tags.push_back("T");
    }
    if (rng.bernoulli(0.5)) tags.push_back("noise");
    ts += static_cast<std::int64_t>(rng.below(5000));
    b.add(ts, tags);
  }
  return std::move(b).finish();
}

}  // namespace fixtures
