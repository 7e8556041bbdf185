#include "cklemap_cli/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "cklemap/error.hpp"
#include "cklemap/io.hpp"

namespace cklemap::cli {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_text(path)); }

void update_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& entry) {
  const auto path = dir / "manifest.json";
  nlohmann::json manifest = nlohmann::json::object();
  if (std::filesystem::exists(path)) {
    try {
      manifest = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path.string() + ": existing manifest is not valid JSON");
    }
  }
  manifest["commands"][command] = entry;
  write_text(path, manifest.dump(2) + "\n");
}

}  // namespace cklemap::cli
