#include "attnshape/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <istream>
#include <ostream>

#include <json.hpp>

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

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Fixed-width decimal field at `pos`; advances pos.
bool take_digits(std::string_view s, std::size_t& pos, std::size_t width,
                 int& out) {
  if (pos + width > s.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < width; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  pos += width;
  return true;
}

bool take_char(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

TagMode parse_tag_mode(std::string_view text) {
  if (text == "per-post" || text == "per_post") return TagMode::per_post;
  if (text == "per-occurrence" || text == "per_occurrence")
    return TagMode::per_occurrence;
  throw ArgumentError("unknown tag mode '" + std::string(text) +
                      "' (expected per-post or per-occurrence)");
}

std::string_view to_string(TagMode mode) {
  return mode == TagMode::per_post ? "per-post" : "per-occurrence";
}

std::string normalize_tag(std::string_view raw) {
  raw = trim(raw);
  while (!raw.empty() && raw.front() == '#') raw.remove_prefix(1);
  std::string out(raw);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

std::int64_t parse_timestamp(std::string_view text) {
  text = trim(text);
  std::int64_t ms = 0;
  if (parse_int(text, ms)) return ms;

  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!take_digits(text, pos, 4, y) || !take_char(text, pos, '-') ||
      !take_digits(text, pos, 2, mo) || !take_char(text, pos, '-') ||
      !take_digits(text, pos, 2, d))
    throw ArgumentError("malformed timestamp '" + std::string(text) + "'");
  const year_month_day date{year{y}, month{static_cast<unsigned>(mo)},
                            day{static_cast<unsigned>(d)}};
  if (!date.ok())
    throw ArgumentError("invalid calendar date '" + std::string(text) + "'");

  std::int64_t frac_ms = 0;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    if (!take_digits(text, pos, 2, h) || !take_char(text, pos, ':') ||
        !take_digits(text, pos, 2, mi))
      throw ArgumentError("malformed time in '" + std::string(text) + "'");
    if (take_char(text, pos, ':')) {
      if (!take_digits(text, pos, 2, sec))
        throw ArgumentError("malformed seconds in '" + std::string(text) + "'");
      if (take_char(text, pos, '.')) {
        int scale = 100;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          frac_ms += (text[pos] - '0') * scale;
          scale /= 10;
          ++pos;
          ++digits;
        }
        if (digits == 0)
          throw ArgumentError("malformed fraction in '" + std::string(text) +
                              "'");
      }
    }
    if (h > 23 || mi > 59 || sec > 60)
      throw ArgumentError("time out of range in '" + std::string(text) + "'");
  }

  std::int64_t offset_min = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      ++pos;
      int oh = 0, om = 0;
      if (!take_digits(text, pos, 2, oh))
        throw ArgumentError("malformed offset in '" + std::string(text) + "'");
      take_char(text, pos, ':');
      if (pos < text.size() && !take_digits(text, pos, 2, om))
        throw ArgumentError("malformed offset in '" + std::string(text) + "'");
      offset_min = (c == '+' ? 1 : -1) * (oh * 60 + om);
    }
  }
  if (pos != text.size())
    throw ArgumentError("trailing characters in timestamp '" +
                        std::string(text) + "'");

  const std::int64_t days = sys_days(date).time_since_epoch().count();
  const std::int64_t seconds =
      days * 86400 + h * 3600 + mi * 60 + sec - offset_min * 60;
  return seconds * 1000 + frac_ms;
}

std::string format_timestamp(std::int64_t ms) {
  using namespace std::chrono;
  const auto tp = sys_time<milliseconds>(milliseconds(ms));
  const auto day_point = floor<days>(tp);
  const year_month_day date{day_point};
  const hh_mm_ss tod{tp - day_point};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()),
                static_cast<long long>(tod.hours().count()),
                static_cast<long long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()),
                static_cast<long long>(tod.subseconds().count()));
  return buf;
}

std::int64_t parse_duration(std::string_view text) {
  text = trim(text);
  std::size_t split = 0;
  while (split < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[split])) ||
          text[split] == '-'))
    ++split;
  std::int64_t value = 0;
  if (!parse_int(text.substr(0, split), value))
    throw ArgumentError("malformed duration '" + std::string(text) + "'");
  const std::string_view unit = text.substr(split);
  std::int64_t scale = 0;
  if (unit.empty() || unit == "ms") scale = 1;
  else if (unit == "s") scale = 1000;
  else if (unit == "m" || unit == "min") scale = 60'000;
  else if (unit == "h") scale = 3'600'000;
  else if (unit == "d") scale = 86'400'000;
  else if (unit == "w") scale = 7 * 86'400'000LL;
  else
    throw ArgumentError("unknown duration unit in '" + std::string(text) + "'");
  return value * scale;
}

// ---------------------------------------------------------------------------

Post Corpus::post(std::uint64_t id) const {
  if (id >= size())
    throw ArgumentError("dataset_id " + std::to_string(id) + " out of range");
  Post p;
  p.dataset_id = id;
  p.timestamp = timestamps_[id];
  for (auto k = tag_offsets_[id]; k < tag_offsets_[id + 1]; ++k)
    p.tags.push_back(tag_names_[tag_ids_[k]]);
  if (id < has_author_.size() && has_author_[id]) p.author = authors_[id];
  return p;
}

std::span<const TagHit> Corpus::hits(std::string_view tag) const {
  const auto it = tag_lookup_.find(std::string(tag));
  if (it == tag_lookup_.end()) return {};
  return index_[it->second];
}

std::uint64_t Corpus::occurrences(std::string_view tag) const {
  std::uint64_t total = 0;
  for (const TagHit& h : hits(tag)) total += h.multiplicity;
  return total;
}

std::vector<std::string> Corpus::tags() const {
  std::vector<std::string> out = tag_names_;
  std::sort(out.begin(), out.end());
  return out;
}

CorpusBuilder::CorpusBuilder(TagMode mode) { corpus_.mode_ = mode; }

std::uint32_t CorpusBuilder::tag_id(std::string_view normalized) {
  auto [it, inserted] = corpus_.tag_lookup_.try_emplace(
      std::string(normalized),
      static_cast<std::uint32_t>(corpus_.tag_names_.size()));
  if (inserted) {
    corpus_.tag_names_.emplace_back(normalized);
    corpus_.index_.emplace_back();
  }
  return it->second;
}

std::uint64_t CorpusBuilder::add_normalized(
    std::int64_t timestamp, std::span<const std::string_view> tags) {
  Corpus& c = corpus_;
  const std::uint64_t id = c.timestamps_.size();
  if (id > 0 && timestamp < c.timestamps_.back()) throw OrderError(id - 1, id);
  c.timestamps_.push_back(timestamp);
  for (std::string_view tag : tags) {
    if (tag.empty()) continue;
    const std::uint32_t tid = tag_id(tag);
    c.tag_ids_.push_back(tid);
    // Repeats within one post fold into a single index entry.
    auto& list = c.index_[tid];
    if (!list.empty() && list.back().dataset_id == id) {
      if (c.mode_ == TagMode::per_occurrence) ++list.back().multiplicity;
      continue;
    }
    list.push_back({id, 1});
  }
  c.tag_offsets_.push_back(c.tag_ids_.size());
  return id;
}

std::uint64_t CorpusBuilder::add(std::int64_t timestamp,
                                 std::span<const std::string> tags,
                                 std::optional<std::string> author) {
  std::vector<std::string> normalized;
  normalized.reserve(tags.size());
  for (const auto& t : tags) normalized.push_back(normalize_tag(t));
  std::vector<std::string_view> views(normalized.begin(), normalized.end());
  const std::uint64_t id = add_normalized(timestamp, views);

  Corpus& c = corpus_;
  if (author) {
    c.authors_.resize(id + 1);
    c.has_author_.resize(id + 1, false);
    c.authors_[id] = std::move(*author);
    c.has_author_[id] = true;
  }
  return id;
}

Corpus CorpusBuilder::finish() && {
  Corpus& c = corpus_;
  if (!c.authors_.empty()) {
    c.authors_.resize(c.size());
    c.has_author_.resize(c.size(), false);
  }
  return std::move(corpus_);
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t json_timestamp(const nlohmann::json& ts) {
  if (ts.is_number_integer()) return ts.get<std::int64_t>();
  if (ts.is_number_unsigned())
    return static_cast<std::int64_t>(ts.get<std::uint64_t>());
  if (ts.is_string()) return parse_timestamp(ts.get<std::string>());
  throw ArgumentError("field 'ts' must be an integer or an ISO-8601 string");
}

void ingest_ndjson_line(CorpusBuilder& builder, std::string_view line) {
  const auto doc = nlohmann::json::parse(line);
  if (!doc.is_object()) throw ArgumentError("record is not a JSON object");
  const auto ts_it = doc.find("ts");
  if (ts_it == doc.end()) throw ArgumentError("missing field 'ts'");
  const std::int64_t ts = json_timestamp(*ts_it);

  std::vector<std::string> tags;
  if (const auto it = doc.find("tags"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ArgumentError("field 'tags' must be an array");
    for (const auto& t : *it) {
      if (!t.is_string()) throw ArgumentError("tag entries must be strings");
      tags.push_back(t.get<std::string>());
    }
  }
  std::optional<std::string> author;
  if (const auto it = doc.find("author"); it != doc.end() && !it->is_null()) {
    author = it->is_string() ? it->get<std::string>() : it->dump();
  }
  builder.add(ts, tags, std::move(author));
}

void ingest_csv_line(CorpusBuilder& builder, std::string_view line) {
  const auto comma = line.find(',');
  const std::string_view ts_field =
      comma == std::string_view::npos ? line : line.substr(0, comma);
  std::string_view rest =
      comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
  std::optional<std::string> author;
  if (const auto c2 = rest.find(','); c2 != std::string_view::npos) {
    const auto a = trim(rest.substr(c2 + 1));
    if (!a.empty()) author = std::string(a);
    rest = rest.substr(0, c2);
  }
  std::vector<std::string> tags;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const auto tag = trim(rest.substr(0, semi));
    if (!tag.empty()) tags.emplace_back(tag);
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  builder.add(parse_timestamp(ts_field), tags, std::move(author));
}

}  // namespace

Corpus ingest(std::istream& in, InputFormat format, TagMode mode) {
  CorpusBuilder builder(mode);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (format == InputFormat::csv) {
      if (view.front() == '#') continue;
      if (line_no == 1 && view.substr(0, 3) == "ts,") continue;  // header
    }
    try {
      if (format == InputFormat::ndjson)
        ingest_ndjson_line(builder, view);
      else
        ingest_csv_line(builder, view);
    } catch (const OrderError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    } catch (const ArgumentError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return std::move(builder).finish();
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

BinnedSeries bin_counts(const Corpus& corpus, std::string_view tag,
                        std::int64_t bin_width) {
  if (bin_width <= 0)
    throw ArgumentError("bin width must be positive, got " +
                        std::to_string(bin_width));
  BinnedSeries series;
  series.bin_width = bin_width;
  if (corpus.empty()) return series;

  const auto ts = corpus.timestamps();
  series.origin = floor_div(ts.front(), bin_width) * bin_width;
  const auto n_bins =
      static_cast<std::size_t>((ts.back() - series.origin) / bin_width) + 1;
  series.counts.assign(n_bins, 0);
  for (const TagHit& h : corpus.hits(tag)) {
    const auto bin =
        static_cast<std::size_t>((ts[h.dataset_id] - series.origin) / bin_width);
    series.counts[bin] += h.multiplicity;
  }
  return series;
}

std::span<const TagHit> hits_in(const Corpus& corpus, std::string_view tag,
                                std::uint64_t lo, std::uint64_t hi) {
  const auto all = corpus.hits(tag);
  const auto by_id = [](const TagHit& h, std::uint64_t id) {
    return h.dataset_id < id;
  };
  const auto first = std::lower_bound(all.begin(), all.end(), lo, by_id);
  const auto last = std::lower_bound(first, all.end(), hi + 1, by_id);
  return {first, last};
}

std::uint64_t total_count(const Corpus& corpus, std::string_view tag,
                          const EventInterval& interval) {
  if (interval.lo > interval.hi)
    throw ArgumentError("inverted interval bounds [" +
                        std::to_string(interval.lo) + ", " +
                        std::to_string(interval.hi) + "]");
  if (interval.hi >= corpus.size())
    throw ArgumentError("interval bound " + std::to_string(interval.hi) +
                        " outside corpus of " + std::to_string(corpus.size()) +
                        " posts");
  std::uint64_t total = 0;
  for (const TagHit& h : hits_in(corpus, tag, interval.lo, interval.hi))
    total += h.multiplicity;
  return total;
}

std::uint64_t total_count(const Corpus& corpus, const EventInterval& interval) {
  return total_count(corpus, interval.tag, interval);
}

void write_bins_csv(std::ostream& out, const BinnedSeries& series) {
  out << "bin_start,count\n";
  for (std::size_t i = 0; i < series.counts.size(); ++i)
    out << series.bin_start(i) << ',' << series.counts[i]
        << '\n';
}

}  // namespace attnshape
