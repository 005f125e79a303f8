#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace iclmine::io {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Throws DataError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace iclmine::io
