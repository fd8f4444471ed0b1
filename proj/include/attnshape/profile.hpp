#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnshape/corpus.hpp"
#include "attnshape/kvconfig.hpp"
#include "attnshape/shape.hpp"

namespace attnshape {

// ---------------------------------------------------------------------------
// Interval bookkeeping

enum class IntervalSource { manual_config, whole_span };

// Boundaries b0 < b1 < ... < bk partition a tag's activity into k intervals:
// [b0, b1 - 1], [b1, b2 - 1], ..., [b(k-1), bk]. The last bound is inclusive.
struct IntervalSpec {
  std::string tag;
  std::vector<std::uint64_t> boundaries;
  IntervalSource source = IntervalSource::manual_config;
};

struct SplitInterval {
  EventInterval interval;
  std::uint64_t topical_count = 0;
  bool excluded = false;
  std::string reason;  // set when excluded
};

// Intervals are labelled "0", "1", ... in boundary order. Intervals with fewer
// than min_count topical occurrences are kept but flagged excluded.
std::vector<SplitInterval> split(const Corpus& corpus, const IntervalSpec& spec,
                                 std::uint64_t min_count = kDefaultMinCount);

// One record per line: `tag: [b, b, ...]` with dataset ids or ISO timestamps,
// or `tag: whole` for the whole-span spec. Lines starting with "# " are
// comments. A timestamp boundary resolves to
// the first post at or after it; a timestamp in the final position resolves
// to the last post at or before it.
std::vector<IntervalSpec> parse_interval_specs(std::istream& in,
                                               const Corpus& corpus);

// ---------------------------------------------------------------------------
// Shape heuristics

enum class ShapeLabel {
  right_tailed,
  arch,
  left_tailed,
  abrupt_shift,
  uniform,
  unclassified,
};

std::string_view to_string(ShapeLabel label);

struct ShapeClass {
  ShapeLabel label = ShapeLabel::unclassified;
  double score = 0.0;  // rule margin in [0, 1]; 0 for unclassified
};

struct ClassifierParams {
  double uniform_tolerance = 1.5;    // values within [N/t, N*t]
  double run_fraction = 0.2;         // plateau length >= fraction * N
  double run_elevation = 2.0;        // plateau mean >= elevation * N
  double boundary_step = 1.0;        // entry/exit steps > step * N
  double run_max_cv = 0.25;          // plateau coefficient of variation
  double tail_quartile = 0.25;       // right-tailed peak before q*N, left after (1-q)*N
  std::size_t smoothing_window = 5;  // centred moving average
  double monotone_slack = 0.05;      // allowed relative reversal per step
  double min_contrast = 1.5;         // smoothed max / min for tailed and arch

  static ClassifierParams from_config(const KeyValues& kv);
};

// Contiguous elevated run with sharp boundaries.
struct Plateau {
  std::size_t first = 0;  // inclusive
  std::size_t last = 0;   // inclusive
  double mean = 0.0;
  double cv = 0.0;
  double entry_step = 0.0;
  double exit_step = 0.0;
};

// Lowest-CV qualifying plateau, if any.
std::optional<Plateau> find_plateau(std::span<const double> values,
                                    const ClassifierParams& params = {});

std::vector<double> moving_average(std::span<const double> values,
                                   std::size_t window);

// Rules in order: uniform, abrupt shift, right-tailed, left-tailed, arch.
// Throws ResolutionError for N < 10, ArgumentError for infinite entries.
ShapeClass classify(const ShapeVector& v, const ClassifierParams& params = {});

// Euclidean distance between log-rates.
double distance(const ShapeVector& a, const ShapeVector& b);

// ---------------------------------------------------------------------------
// Vector CSV

struct LabeledVector {
  EventInterval interval;
  ShapeVector vector;
};

struct ExportResult {
  std::size_t rows = 0;
  std::vector<std::string> excluded;  // "tag,label: reason"
};

void write_vectors_header(std::ostream& out, std::size_t n_quantiles);
void write_vector_row(std::ostream& out, const LabeledVector& row,
                      std::optional<double> cap = std::nullopt);

// Without `cap`, rows containing infinite rates are dropped and noted in the
// result; with `cap`, infinite (and larger) entries are clamped to it.
ExportResult export_vectors(std::ostream& out,
                            std::span<const LabeledVector> vectors,
                            std::optional<double> cap = std::nullopt);

std::vector<LabeledVector> read_vectors_csv(std::istream& in);

std::string csv_field(std::string_view text);
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace attnshape
