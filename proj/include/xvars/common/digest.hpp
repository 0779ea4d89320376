#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace xvars {

/// Hex SHA-256 prefixed with "sha256:".
std::string sha256_digest(std::span<const unsigned char> bytes);
std::string sha256_digest(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace xvars
