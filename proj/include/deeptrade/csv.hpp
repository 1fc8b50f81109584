#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace deeptrade::csv {

// Splits one line on commas and trims surrounding whitespace. No quoting.
std::vector<std::string> split(std::string_view line);

std::optional<double> parse_double(std::string_view text);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Fixed-precision formatting for human-facing tables.
std::string format_fixed(double v, int digits);

// Reads all lines, stripping '\r' and a UTF-8 BOM. Throws Error{IoError}.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes text atomically enough for our purposes (truncate + write). Creates
// parent directories. Throws Error{UnwritableOutput}.
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace deeptrade::csv
