#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace attnshape {

// How repeated tags inside one post are counted.
enum class TagMode {
  per_post,        // multiplicity capped at 1
  per_occurrence,  // every repeat counts
};

TagMode parse_tag_mode(std::string_view text);
std::string_view to_string(TagMode mode);

enum class InputFormat { ndjson, csv };

// One message of the stream, materialized from a Corpus.
struct Post {
  std::uint64_t dataset_id = 0;
  std::int64_t timestamp = 0;  // ms since epoch
  std::vector<std::string> tags;
  std::optional<std::string> author;
};

// Occurrences of one tag in one post.
struct TagHit {
  std::uint64_t dataset_id = 0;
  std::uint32_t multiplicity = 0;

  friend bool operator==(const TagHit&, const TagHit&) = default;
};

// Contiguous dataset_id range [lo, hi] analysed for one tag.
struct EventInterval {
  std::string tag;
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  std::string label;
};

struct BinnedSeries {
  std::int64_t bin_width = 0;  // ms
  std::int64_t origin = 0;     // ms, multiple of bin_width
  std::vector<std::uint64_t> counts;

  std::int64_t bin_start(std::size_t i) const {
    return origin + static_cast<std::int64_t>(i) * bin_width;
  }
};

// Immutable, indexed post stream. Posts are stored column-wise; dataset ids
// are positions, so a post's id is never stored explicitly.
class Corpus {
 public:
  Corpus() = default;

  std::size_t size() const { return timestamps_.size(); }
  bool empty() const { return timestamps_.empty(); }
  TagMode tag_mode() const { return mode_; }

  std::int64_t timestamp(std::uint64_t id) const { return timestamps_.at(id); }
  std::span<const std::int64_t> timestamps() const { return timestamps_; }

  Post post(std::uint64_t id) const;

  // Index entries for `tag`, sorted by dataset_id; empty if the tag is absent.
  std::span<const TagHit> hits(std::string_view tag) const;

  // Total occurrences of `tag` over the whole corpus.
  std::uint64_t occurrences(std::string_view tag) const;

  // Every distinct tag, sorted.
  std::vector<std::string> tags() const;

 private:
  friend class CorpusBuilder;

  TagMode mode_ = TagMode::per_occurrence;
  std::vector<std::int64_t> timestamps_;
  // tags of post i are tag_ids_[tag_offsets_[i] .. tag_offsets_[i + 1])
  std::vector<std::uint64_t> tag_offsets_{0};
  std::vector<std::uint32_t> tag_ids_;
  std::vector<std::string> tag_names_;
  std::unordered_map<std::string, std::uint32_t> tag_lookup_;
  std::vector<std::vector<TagHit>> index_;
  // Parallel to posts once any record carries an author; empty before that.
  std::vector<std::string> authors_;
  std::vector<bool> has_author_;
};

// Sequential single-pass builder; assigns dataset ids in arrival order.
class CorpusBuilder {
 public:
  explicit CorpusBuilder(TagMode mode = TagMode::per_occurrence);

  // Throws OrderError when `timestamp` is earlier than the previous post's.
  std::uint64_t add(std::int64_t timestamp, std::span<const std::string> tags,
                    std::optional<std::string> author = std::nullopt);

  // Fast path for pre-normalized tags (used by the simulator bridge).
  std::uint64_t add_normalized(std::int64_t timestamp,
                               std::span<const std::string_view> tags);

  std::size_t size() const { return corpus_.size(); }

  Corpus finish() &&;

 private:
  std::uint32_t tag_id(std::string_view normalized);

  Corpus corpus_;
};

// Lowercase and strip leading '#'.
std::string normalize_tag(std::string_view raw);

// ISO-8601 (`YYYY-MM-DD[THH:MM[:SS[.fff]]][Z|+HH:MM]`) or integer ms.
// Throws ArgumentError on malformed text.
std::int64_t parse_timestamp(std::string_view text);

std::string format_timestamp(std::int64_t ms);

// Reads newline-delimited records (`{"ts":..., "tags":[...], "author":...}`)
// or `ts,tags[,author]` CSV with ';'-separated tags.
Corpus ingest(std::istream& in, InputFormat format,
              TagMode mode = TagMode::per_occurrence);

// Occurrences of `tag` in [origin + i*w, origin + (i+1)*w), covering the
// corpus span. origin is the first timestamp floored to a multiple of w.
BinnedSeries bin_counts(const Corpus& corpus, std::string_view tag,
                        std::int64_t bin_width);

// Occurrences of `tag` among posts [interval.lo, interval.hi].
std::uint64_t total_count(const Corpus& corpus, std::string_view tag,
                          const EventInterval& interval);
std::uint64_t total_count(const Corpus& corpus, const EventInterval& interval);

// Hits of `tag` restricted to [lo, hi].
std::span<const TagHit> hits_in(const Corpus& corpus, std::string_view tag,
                                std::uint64_t lo, std::uint64_t hi);

// Duration literal such as "1h", "6h", "1d", "30m", "15s", "250ms" or plain ms.
std::int64_t parse_duration(std::string_view text);

void write_bins_csv(std::ostream& out, const BinnedSeries& series);

}  // namespace attnshape
