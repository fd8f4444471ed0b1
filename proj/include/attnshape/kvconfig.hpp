#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace attnshape {

// Flat `key = value` document. `[section]` headers prefix following keys as
// `section.key`. '#' and ';' start comment lines.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in);
  static KeyValues parse(std::string_view text);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;

  // Keys under `section.`, with the prefix removed.
  KeyValues section(const std::string& name) const;

  // Sorted `key=value` lines; stable input for digests.
  std::string canonical() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace attnshape
