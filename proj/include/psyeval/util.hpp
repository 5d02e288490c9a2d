#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace psyeval {

/// Lowercase hex SHA-256 of the given bytes.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never see a torn file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form of a temperature ("0", "0.2", "1").
[[nodiscard]] std::string format_temperature(double temperature);

/// Fixed-point rendering with `decimals` digits.
[[nodiscard]] std::string format_fixed(double value, int decimals);

[[nodiscard]] std::string to_lower_ascii(std::string_view text);

[[nodiscard]] std::string trim(std::string_view text);

}  // namespace psyeval
