#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace attnshape::cli {

inline constexpr std::string_view kToolVersion = "attnshape 0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// Writes to `<path>.tmp.<pid>` and renames over `path` on commit. An
// uncommitted file is removed on destruction.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_atomic(const std::filesystem::path& path, std::string_view content);

struct Manifest {
  std::string command;
  std::string config_digest;  // sha256 of the canonical config text
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::string tool_version = std::string(kToolVersion);
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

std::string manifest_json(const Manifest& manifest);

// `<output>.manifest.json`, next to the output it describes.
std::filesystem::path manifest_path(const std::filesystem::path& output);

}  // namespace attnshape::cli
