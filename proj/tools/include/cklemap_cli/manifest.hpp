#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace cklemap::cli {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Records `entry` under commands.<command> in <dir>/manifest.json, keeping
/// entries of other commands. Keys are written sorted, so equal content
/// gives equal bytes.
void update_manifest(const std::filesystem::path& dir, const std::string& command, const nlohmann::json& entry);

}  // namespace cklemap::cli
