#include "attnshape/kvconfig.hpp"

#include <cctype>
#include <charconv>
#include <istream>
#include <sstream>

#include "attnshape/error.hpp"

namespace attnshape {

namespace {

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

KeyValues KeyValues::parse(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::string prefix;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trimmed(line);
    if (t.empty() || t.front() == '#' || t.front() == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(line_no, "unterminated section header");
      const std::string name = trimmed(std::string_view(t).substr(1, t.size() - 2));
      prefix = name.empty() ? "" : name + ".";
      continue;
    }
    const auto sep = t.find_first_of("=:");
    if (sep == std::string::npos)
      throw ParseError(line_no, "expected 'key = value', got '" + t + "'");
    const std::string key = trimmed(std::string_view(t).substr(0, sep));
    if (key.empty()) throw ParseError(line_no, "empty key");
    kv.values_[prefix + key] = trimmed(std::string_view(t).substr(sep + 1));
  }
  return kv;
}

KeyValues KeyValues::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("key '" + key + "': expected a number, got '" + *v + "'");
  return out;
}

std::int64_t KeyValues::get_int(const std::string& key,
                                std::int64_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + *v + "'");
  return out;
}

KeyValues KeyValues::section(const std::string& name) const {
  KeyValues out;
  const std::string prefix = name + ".";
  for (auto it = values_.lower_bound(prefix);
       it != values_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
       ++it)
    out.values_[it->first.substr(prefix.size())] = it->second;
  return out;
}

std::string KeyValues::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

}  // namespace attnshape
