#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace clinex::io {

/// Throws Error(MissingInput) if absent, Error(Io) if unreadable.
std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, creating parent directories.
/// Throws Error(Io).
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace clinex::io
