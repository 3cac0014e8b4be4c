#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace krasovskii {

/// Shortest decimal representation that round-trips to the same double.
[[nodiscard]] std::string format_double(double value);

/// Writes `contents` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace krasovskii
