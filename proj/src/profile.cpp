#include "attnshape/profile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "attnshape/error.hpp"

namespace attnshape {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c);
  });
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<SplitInterval> split(const Corpus& corpus, const IntervalSpec& spec,
                                 std::uint64_t min_count) {
  std::vector<std::uint64_t> bounds = spec.boundaries;
  const auto make = [&](std::uint64_t lo, std::uint64_t hi, std::size_t i) {
    SplitInterval s;
    s.interval = {spec.tag, lo, hi, std::to_string(i)};
    s.topical_count = total_count(corpus, s.interval);
    if (s.topical_count < min_count) {
      s.excluded = true;
      s.reason = "below min_count=" + std::to_string(min_count);
    }
    return s;
  };
  if (spec.source == IntervalSource::whole_span) {
    const auto hits = corpus.hits(spec.tag);
    if (hits.empty()) return {};
    // a single topical post still yields an interval, degenerate downstream
    return {make(hits.front().dataset_id, hits.back().dataset_id, 0)};
  }
  if (bounds.size() < 2)
    throw ArgumentError("interval spec for '" + spec.tag +
                        "' needs at least two boundaries");
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i] >= corpus.size())
      throw ArgumentError("boundary " + std::to_string(bounds[i]) +
                          " outside corpus of " + std::to_string(corpus.size()) +
                          " posts");
    if (i > 0 && bounds[i] <= bounds[i - 1])
      throw ArgumentError("boundaries for '" + spec.tag +
                          "' must be strictly increasing");
  }

  std::vector<SplitInterval> out;
  out.reserve(bounds.size() - 1);
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const bool last = i + 2 == bounds.size();
    out.push_back(make(bounds[i], last ? bounds[i + 1] : bounds[i + 1] - 1, i));
  }
  return out;
}

std::vector<IntervalSpec> parse_interval_specs(std::istream& in,
                                               const Corpus& corpus) {
  std::vector<IntervalSpec> specs;
  const auto ts = corpus.timestamps();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    // '#' followed by a space is a comment; '#tag:' is a record.
    if (t.empty() || (t.front() == '#' && (t.size() == 1 || t[1] == ' ' || t[1] == '#')))
      continue;
    // The tag ends at the first ':' followed by whitespace or '['; ISO times
    // inside the list contain colons too.
    std::size_t colon = std::string_view::npos;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] == ':' && (i + 1 == t.size() || t[i + 1] == ' ' || t[i + 1] == '[')) {
        colon = i;
        break;
      }
    }
    if (colon == std::string_view::npos)
      throw ParseError(line_no, "expected 'tag: [boundaries]'");
    IntervalSpec spec;
    spec.tag = normalize_tag(t.substr(0, colon));
    if (spec.tag.empty()) throw ParseError(line_no, "empty tag");
    std::string_view rest = trim(t.substr(colon + 1));
    if (rest == "whole" || rest == "*") {
      spec.source = IntervalSource::whole_span;
      specs.push_back(std::move(spec));
      continue;
    }
    if (rest.size() < 2 || rest.front() != '[' || rest.back() != ']')
      throw ParseError(line_no, "boundary list must be enclosed in [ ]");
    rest = rest.substr(1, rest.size() - 2);

    std::vector<std::string_view> fields;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      fields.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      std::string_view f = fields[i];
      if (f.size() >= 2 && (f.front() == '"' || f.front() == '\''))
        f = f.substr(1, f.size() - 2);
      if (f.empty()) throw ParseError(line_no, "empty boundary");
      if (all_digits(f)) {
        spec.boundaries.push_back(std::stoull(std::string(f)));
        continue;
      }
      std::int64_t when = 0;
      try {
        when = parse_timestamp(f);
      } catch (const ArgumentError& e) {
        throw ParseError(line_no, e.what());
      }
      const bool final_bound = i + 1 == fields.size();
      std::uint64_t id = 0;
      if (final_bound) {
        const auto it = std::upper_bound(ts.begin(), ts.end(), when);
        if (it == ts.begin())
          throw ParseError(line_no, "timestamp precedes the corpus");
        id = static_cast<std::uint64_t>(it - ts.begin()) - 1;
      } else {
        const auto it = std::lower_bound(ts.begin(), ts.end(), when);
        if (it == ts.end())
          throw ParseError(line_no, "timestamp follows the corpus");
        id = static_cast<std::uint64_t>(it - ts.begin());
      }
      spec.boundaries.push_back(id);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ShapeLabel label) {
  switch (label) {
    case ShapeLabel::right_tailed: return "right-tailed";
    case ShapeLabel::arch: return "arch";
    case ShapeLabel::left_tailed: return "left-tailed";
    case ShapeLabel::abrupt_shift: return "abrupt-shift";
    case ShapeLabel::uniform: return "uniform";
    case ShapeLabel::unclassified: return "unclassified";
  }
  return "unclassified";
}

ClassifierParams ClassifierParams::from_config(const KeyValues& kv) {
  ClassifierParams p;
  p.uniform_tolerance = kv.get_double("uniform_tolerance", p.uniform_tolerance);
  p.run_fraction = kv.get_double("run_fraction", p.run_fraction);
  p.run_elevation = kv.get_double("run_elevation", p.run_elevation);
  p.boundary_step = kv.get_double("boundary_step", p.boundary_step);
  p.run_max_cv = kv.get_double("run_max_cv", p.run_max_cv);
  p.tail_quartile = kv.get_double("tail_quartile", p.tail_quartile);
  p.smoothing_window = static_cast<std::size_t>(
      kv.get_int("smoothing_window", static_cast<std::int64_t>(p.smoothing_window)));
  p.monotone_slack = kv.get_double("monotone_slack", p.monotone_slack);
  p.min_contrast = kv.get_double("min_contrast", p.min_contrast);
  if (p.uniform_tolerance < 1.0 || p.run_fraction <= 0.0 ||
      p.run_fraction > 1.0 || p.run_max_cv < 0.0 || p.tail_quartile <= 0.0 ||
      p.tail_quartile >= 0.5 || p.smoothing_window == 0 ||
      p.monotone_slack < 0.0)
    throw ConfigError("classifier thresholds out of range");
  return p;
}

std::vector<double> moving_average(std::span<const double> values,
                                   std::size_t window) {
  const std::size_t half = window / 2;
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(values.size() - 1, i + half);
    double sum = 0;
    for (std::size_t k = lo; k <= hi; ++k) sum += values[k];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::optional<Plateau> find_plateau(std::span<const double> v,
                                    const ClassifierParams& params) {
  const std::size_t n = v.size();
  if (n < 3) return std::nullopt;
  const double scale = static_cast<double>(n);
  const auto min_len = static_cast<std::size_t>(
      std::ceil(params.run_fraction * scale - 1e-9));

  std::vector<double> sum(n + 1, 0.0), sq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[i + 1] = sum[i] + v[i];
    sq[i + 1] = sq[i] + v[i] * v[i];
  }

  std::optional<Plateau> best;
  for (std::size_t first = 1; first + 1 < n; ++first) {
    const double entry = v[first] - v[first - 1];
    if (!(entry > params.boundary_step * scale)) continue;
    for (std::size_t last = first + std::max<std::size_t>(min_len, 1) - 1;
         last + 1 < n; ++last) {
      const double exit = v[last] - v[last + 1];
      if (!(exit > params.boundary_step * scale)) continue;
      const auto len = static_cast<double>(last - first + 1);
      const double mean = (sum[last + 1] - sum[first]) / len;
      if (mean < params.run_elevation * scale) continue;
      const double var =
          std::max(0.0, (sq[last + 1] - sq[first]) / len - mean * mean);
      const double cv = std::sqrt(var) / mean;
      if (cv > params.run_max_cv) continue;
      if (!best || cv < best->cv)
        best = Plateau{first, last, mean, cv, entry, exit};
    }
  }
  return best;
}

namespace {

bool decays(const std::vector<double>& s, std::size_t from, std::size_t to,
            double slack) {
  for (std::size_t i = from; i < to; ++i)
    if (s[i + 1] > s[i] * (1.0 + slack)) return false;
  return true;
}

bool rises(const std::vector<double>& s, std::size_t from, std::size_t to,
           double slack) {
  for (std::size_t i = from; i < to; ++i)
    if (s[i + 1] < s[i] * (1.0 - slack)) return false;
  return true;
}

}  // namespace

ShapeClass classify(const ShapeVector& v, const ClassifierParams& params) {
  const std::size_t n = v.values.size();
  if (n < 10)
    throw ResolutionError("classification needs N >= 10, got " +
                          std::to_string(n));
  if (v.has_infinity())
    throw ArgumentError("classification needs finite or capped rates");
  const auto& x = v.values;
  const double scale = static_cast<double>(n);

  // (1) uniform
  {
    const double log_tol = std::log(params.uniform_tolerance);
    double worst = 0;
    for (double value : x) worst = std::max(worst, std::abs(std::log(value / scale)));
    if (worst <= log_tol + 1e-12) {
      const double score = log_tol > 0 ? 1.0 - worst / log_tol : 1.0;
      return {ShapeLabel::uniform, std::clamp(score, 0.0, 1.0)};
    }
  }

  // (2) abrupt shift
  if (const auto plateau = find_plateau(x, params)) {
    const double score =
        params.run_max_cv > 0 ? 1.0 - plateau->cv / params.run_max_cv : 1.0;
    return {ShapeLabel::abrupt_shift, std::clamp(score, 0.0, 1.0)};
  }

  const auto smooth = moving_average(x, params.smoothing_window);
  const auto peak = static_cast<std::size_t>(
      std::max_element(x.begin(), x.end()) - x.begin());
  const auto smooth_peak = static_cast<std::size_t>(
      std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
  const auto [lo_it, hi_it] = std::minmax_element(smooth.begin(), smooth.end());
  const double contrast = *hi_it / *lo_it;
  if (contrast < params.min_contrast) return {};
  const double score = std::clamp(1.0 - *lo_it / *hi_it, 0.0, 1.0);
  const double slack = params.monotone_slack;
  const auto p = static_cast<double>(peak);
  const auto ps = static_cast<double>(smooth_peak);
  const double early = params.tail_quartile * scale;
  const double late = (1.0 - params.tail_quartile) * scale;

  // (3) right-tailed
  if (p < early && ps < early && decays(smooth, smooth_peak, n - 1, slack))
    return {ShapeLabel::right_tailed, score};
  // (4) left-tailed
  if (p > late && ps > late && rises(smooth, 0, smooth_peak, slack))
    return {ShapeLabel::left_tailed, score};
  // (5) arch
  if (p >= early && p <= late && ps >= early && ps <= late &&
      rises(smooth, 0, smooth_peak, slack) &&
      decays(smooth, smooth_peak, n - 1, slack))
    return {ShapeLabel::arch, score};
  return {};
}

double distance(const ShapeVector& a, const ShapeVector& b) {
  if (a.values.size() != b.values.size())
    throw ArgumentError("distance needs equal N (" +
                        std::to_string(a.values.size()) + " vs " +
                        std::to_string(b.values.size()) + ")");
  double sum = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = a.values[i], y = b.values[i];
    if (!std::isfinite(x) || !std::isfinite(y))
      throw ArgumentError("distance needs finite or capped rates");
    if (x <= 0 || y <= 0) throw ArgumentError("rates must be positive");
    const double d = std::log(x) - std::log(y);
    sum += d * d;
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

void write_vectors_header(std::ostream& out, std::size_t n_quantiles) {
  out << "tag,label,topical_count,span_posts";
  for (std::size_t i = 1; i <= n_quantiles; ++i) out << ",v" << i;
  out << '\n';
}

void write_vector_row(std::ostream& out, const LabeledVector& row,
                      std::optional<double> cap) {
  out << csv_field(row.interval.tag) << ',' << csv_field(row.interval.label)
      << ',' << row.vector.topical_count << ',' << row.vector.span_posts;
  for (double value : row.vector.values)
    out << ',' << format_rate(cap ? std::min(value, *cap) : value);
  out << '\n';
}

ExportResult export_vectors(std::ostream& out,
                            std::span<const LabeledVector> vectors,
                            std::optional<double> cap) {
  std::size_t n = 0;
  for (const auto& v : vectors) n = std::max(n, v.vector.values.size());
  write_vectors_header(out, n);
  ExportResult result;
  for (const auto& v : vectors) {
    if (!cap && v.vector.has_infinity()) {
      result.excluded.push_back(v.interval.tag + "," + v.interval.label +
                                ": infinite rate (duplicate positions)");
      continue;
    }
    write_vector_row(out, v, cap);
    ++result.rows;
  }
  return result;
}

std::vector<LabeledVector> read_vectors_csv(std::istream& in) {
  std::vector<LabeledVector> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "tag") continue;
    if (fields.size() < 4)
      throw ParseError(line_no, "vector row needs tag,label,topical_count,span_posts");
    LabeledVector row;
    row.interval.tag = fields[0];
    row.interval.label = fields[1];
    try {
      row.vector.topical_count = std::stoull(fields[2]);
      row.vector.span_posts = std::stoull(fields[3]);
      for (std::size_t i = 4; i < fields.size(); ++i)
        row.vector.values.push_back(parse_rate(std::string(trim(fields[i]))));
    } catch (const std::exception& e) {
      throw ParseError(line_no, e.what());
    }
    row.vector.n_quantiles = row.vector.values.size();
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace attnshape
