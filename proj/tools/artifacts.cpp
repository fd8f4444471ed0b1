#include "artifacts.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <iterator>
#include <memory>
#include <sstream>
#include <json.hpp>

#include "attnshape/error.hpp"

namespace attnshape::cli {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(),
                 nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

AtomicFile::AtomicFile(std::filesystem::path path) : path_(std::move(path)) {
  tmp_ = path_;
  tmp_ += ".tmp." + std::to_string(::getpid());
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error("cannot write " + path_.string());
}

AtomicFile::~AtomicFile() {
  if (committed_) return;
  out_.close();
  std::error_code ec;
  std::filesystem::remove(tmp_, ec);
}

void AtomicFile::commit() {
  out_.flush();
  if (!out_) throw Error("write failed for " + path_.string());
  out_.close();
  std::filesystem::rename(tmp_, path_);
  committed_ = true;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  AtomicFile f(path);
  f.stream() << content;
  f.commit();
}

std::string manifest_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config_digest"] = "sha256:" + m.config_digest;
  auto& inputs = j["input_digests"] = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : m.inputs)
    inputs.push_back({{"path", path}, {"sha256", digest}});
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

std::filesystem::path manifest_path(const std::filesystem::path& output) {
  auto p = output;
  p += ".manifest.json";
  return p;
}

}  // namespace attnshape::cli
