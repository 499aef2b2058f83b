#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sentipipe {

/// Whole-file read. Throws ConfigError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary and rename, so readers never observe a
/// half-written file. Creates parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace sentipipe
