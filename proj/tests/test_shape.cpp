#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "attnshape/error.hpp"
#include "attnshape/rng.hpp"
#include "attnshape/shape.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace attnshape;

namespace {

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Every post topical.
std::vector<TagHit> dense_hits(std::uint64_t first, std::uint64_t count) {
  std::vector<TagHit> hits;
  for (std::uint64_t i = 0; i < count; ++i) hits.push_back({first + i, 1});
  return hits;
}

}  // namespace

TEST_CASE("normalize_ids reproduces the worked example's positions") {
  const auto hits = fixtures::as_hits(fixtures::betrayal_ids());
  CHECK(hits.front().dataset_id == 11207549);
  CHECK(hits[1].dataset_id == 11214100);
  CHECK(hits[2].dataset_id == 11215455);
  CHECK(hits[248].dataset_id == 12498903);
  CHECK(hits[249].dataset_id == 12519628);
  CHECK(hits.back().dataset_id == 12523526);

  const auto xs = normalize_ids(hits).xs;
  REQUIRE(xs.size() == 251);
  CHECK(xs[0] == 0.0);
  CHECK(round3(xs[1]) == 0.005);
  CHECK(round3(xs[2]) == 0.006);
  CHECK(round3(xs[248]) == 0.981);
  CHECK(round3(xs[249]) == 0.997);
  CHECK(xs[250] == 1.0);
}

TEST_CASE("normalize_ids expands multiplicity and rejects degenerate input") {
  const std::vector<TagHit> dup{{5, 2}, {10, 1}};
  CHECK(normalize_ids(dup).xs == std::vector<double>{0, 0, 1});
  const std::vector<TagHit> pair{{0, 1}, {100, 1}};
  CHECK(normalize_ids(pair).xs == std::vector<double>{0, 1});

  const std::vector<TagHit> one{{3, 1}};
  CHECK_THROWS_AS(normalize_ids(one), DegenerateIntervalError);
  const std::vector<TagHit> same{{3, 4}};
  CHECK_THROWS_AS(normalize_ids(same), DegenerateIntervalError);
  CHECK_THROWS_AS(normalize_ids({}), DegenerateIntervalError);
}

TEST_CASE("quantile_sample") {
  SUBCASE("worked example, N = 25") {
    const auto q = quantile_sample(normalize_ids(fixtures::as_hits(fixtures::betrayal_ids())), 25);
    REQUIRE(q.size() == 26);
    CHECK(q.front() == 0.0);
    CHECK(q.back() == 1.0);
    CHECK(round3(q[1]) == 0.042);
    CHECK(round3(q[2]) == 0.069);
    CHECK(round3(q[23]) == 0.841);
    CHECK(round3(q[24]) == 0.939);
  }
  SUBCASE("exact order statistics") {
    CHECK(quantile_sample({{0, 0.5, 1}}, 2) == std::vector<double>{0, 0.5, 1});
  }
  SUBCASE("uniform grid of 101 positions, N = 10") {
    NormalizedPositions p;
    for (int i = 0; i <= 100; ++i) p.xs.push_back(i / 100.0);
    const auto q = quantile_sample(p, 10);
    for (int j = 0; j <= 10; ++j) CHECK(q[j] == doctest::Approx(j / 10.0).epsilon(1e-12));
  }
  SUBCASE("interpolates between order statistics") {
    // m = 4, N = 3: h = j, so q = xs exactly; N = 2: h = 1.5 between 0.2, 0.6.
    const NormalizedPositions p{{0, 0.2, 0.6, 1}};
    CHECK(quantile_sample(p, 3) == std::vector<double>{0, 0.2, 0.6, 1});
    CHECK(quantile_sample(p, 2)[1] == doctest::Approx(0.4));
  }
  CHECK_THROWS_AS(quantile_sample({{0, 1}}, 0), ArgumentError);
}

TEST_CASE("representation of the worked example") {
  const ShapeVector v = representation(fixtures::as_hits(fixtures::betrayal_ids()), 25);
  REQUIRE(v.values.size() == 25);
  CHECK(v.values[0] == doctest::Approx(23.7).epsilon(0.002));
  CHECK(v.values[1] == doctest::Approx(36.8).epsilon(0.002));
  CHECK(v.values[2] == doctest::Approx(48.5).epsilon(0.002));
  CHECK(v.values[22] == doctest::Approx(22.3).epsilon(0.002));
  CHECK(v.values[23] == doctest::Approx(10.2).epsilon(0.002));
  CHECK(v.values[24] == doctest::Approx(16.4).epsilon(0.002));
  CHECK(v.topical_count == 251);
  CHECK(std::abs(reciprocal_sum(v) - 1.0) <= 1e-9);
}

TEST_CASE("uniform stream gives the constant vector N exactly") {
  for (std::size_t n : {1u, 7u, 10u, 25u, 50u, 100u, 333u}) {
    for (std::uint64_t count : {2u, 11u, 101u, 1000u, 4097u}) {
      const ShapeVector v = representation(dense_hits(17, count), n);
      for (double x : v.values) CHECK(x == static_cast<double>(n));
    }
  }
}

TEST_CASE("duplicate positions straddling quantiles give the infinity sentinel") {
  const std::vector<TagHit> hits{{0, 1}, {10, 3}, {20, 1}};
  const ShapeVector v = representation(hits, 4);
  REQUIRE(v.values.size() == 4);
  CHECK(v.values[0] == 2.0);
  CHECK(std::isinf(v.values[1]));
  CHECK(std::isinf(v.values[2]));
  CHECK(v.values[3] == 2.0);
  CHECK(v.has_infinity());
  CHECK(reciprocal_sum(v) == doctest::Approx(1.0));
}

TEST_CASE("representation from a corpus interval") {
  const Corpus c = fixtures::betrayal_corpus();
  const EventInterval whole{"betrayal", 0, c.size() - 1, "0"};
  const ShapeVector v = representation(c, whole, {25, 100, false});
  CHECK(v.values[0] == doctest::Approx(23.7).epsilon(0.005));
  CHECK(v.span_posts == c.size() - 1);
  CHECK(v.topical_count == 251);
  CHECK_FALSE(v.below_min_count);

  SUBCASE("threshold is a flag by default and an error in strict mode") {
    const ShapeVector flagged = representation(c, whole, {25, 252, false});
    CHECK(flagged.below_min_count);
    CHECK_THROWS_AS(representation(c, whole, {25, 252, true}), ThresholdError);
  }
  SUBCASE("argument errors") {
    CHECK_THROWS_AS(representation(c, {"betrayal", 5, 4, ""}), ArgumentError);
    CHECK_THROWS_AS(representation(c, {"betrayal", 0, c.size(), ""}), ArgumentError);
    CHECK_THROWS_AS(representation(c, {"missing", 0, c.size() - 1, ""}, {25, 0, false}),
                    DegenerateIntervalError);
  }
}

TEST_CASE("matches the brute-force oracle on a seeded 1000-post corpus") {
  Rng rng(2024);
  const Corpus c = fixtures::random_corpus(rng, 1000, TagMode::per_occurrence);
  const EventInterval all{"t", 0, c.size() - 1, ""};
  const ShapeVector v = representation(c, all, {50, 0, false});
  const auto expected = oracle::brute_force_representation(c, all, 50);
  REQUIRE(v.values.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (std::isinf(expected[i])) {
      CHECK(std::isinf(v.values[i]));
    } else {
      CHECK(std::abs(v.values[i] - expected[i]) <= 1e-9);
    }
  }
}

TEST_CASE("property: reciprocal sum is 1 and finite rates are >= 1") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto mode = trial % 3 == 0 ? TagMode::per_post : TagMode::per_occurrence;
    const Corpus c = fixtures::random_corpus(rng, 100 + rng.below(3000), mode);
    const std::size_t n = 1 + rng.below(120);
    const ShapeVector v = representation(c, {"t", 0, c.size() - 1, ""}, {n, 0, false});
    CHECK(v.values.size() == n);
    CHECK(std::abs(reciprocal_sum(v) - 1.0) <= 1e-9);
    for (double x : v.values) CHECK((std::isinf(x) || x >= 1.0));
  }
}

TEST_CASE("property: representation ignores wall-clock time") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Corpus c = fixtures::random_corpus(rng, 1500, TagMode::per_occurrence);
    CorpusBuilder warped(TagMode::per_occurrence);
    std::int64_t t = -5'000'000;
    for (std::uint64_t id = 0; id < c.size(); ++id) {
      // strictly increasing warp of the original order
      t += 1 + static_cast<std::int64_t>(rng.below(1'000'000));
      warped.add(t, c.post(id).tags);
    }
    const Corpus w = std::move(warped).finish();
    const EventInterval all{"t", 0, c.size() - 1, ""};
    const ShapeVector a = representation(c, all);
    const ShapeVector b = representation(w, all);
    REQUIRE(a.values.size() == b.values.size());
    CHECK(std::memcmp(a.values.data(), b.values.data(),
                      a.values.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("property: background insertion keeps the argmax") {
  // Right-tailed prototype: 501 topical posts, so each of the 50 quantiles
  // spans 10 consecutive order statistics. Quantile 10 is dense (one post per
  // occurrence); spacing widens with distance from it, faster before the peak.
  std::vector<std::uint64_t> topical{0};
  for (std::size_t q = 0; q < 50; ++q) {
    const std::uint64_t spacing =
        q == 10 ? 1 : q < 10 ? 4 + 2 * (10 - q) : 3 + (q - 10) / 2;
    for (int k = 0; k < 10; ++k) topical.push_back(topical.back() + spacing);
  }
  const std::uint64_t base_posts = topical.back() + 1;
  std::vector<TagHit> base;
  for (auto id : topical) base.push_back({id, 1});
  const std::size_t reference = argmax(representation(base, 50).values);
  REQUIRE(reference == 10);

  Rng rng(32);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // k = 3 extra posts on average between every pair of consecutive posts.
    std::vector<std::uint64_t> new_id(base_posts);
    std::uint64_t offset = 0;
    for (std::uint64_t i = 0; i < base_posts; ++i) {
      new_id[i] = i + offset;
      offset += rng.below(7);
    }
    std::vector<TagHit> hits;
    for (auto id : topical) hits.push_back({new_id[id], 1});
    if (argmax(representation(hits, 50).values) == reference) ++agree;
  }
  CHECK(agree >= 90);
}

TEST_CASE("property: quantile gaps refine additively from N to 2N") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const Corpus c = fixtures::random_corpus(rng, 2000, TagMode::per_post);
    const std::size_t n = 5 + rng.below(40);
    const EventInterval all{"t", 0, c.size() - 1, ""};
    const ShapeVector coarse = representation(c, all, {n, 0, false});
    const ShapeVector fine = representation(c, all, {2 * n, 0, false});
    const double m = static_cast<double>(coarse.topical_count);
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = 1.0 / coarse.values[i];
      const double refined = 1.0 / fine.values[2 * i] + 1.0 / fine.values[2 * i + 1];
      CHECK(std::abs(gap - refined) <= 2.0 / m);
      CHECK(std::abs(gap - refined) <= 1e-12);
    }
  }
}

TEST_CASE("rate formatting round-trips") {
  for (double x : {1.0, 23.7, 1.0 / 3.0, 1e300, kInfiniteRate})
    CHECK(parse_rate(format_rate(x)) == x);
  CHECK(format_rate(kInfiniteRate) == "inf");
  CHECK_THROWS_AS(parse_rate("1.2.3"), ArgumentError);
}
