#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerprobe::text {

// Splits on `delim` without quote handling; identifiers in every file this
// project reads or writes never contain the delimiter.
std::vector<std::string_view> split(std::string_view line, char delim);

// Lines of a text file with trailing '\r' removed. A final newline does not
// produce an empty trailing line. Throws DataError when unreadable.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// 17 significant digits; parses back to the identical double.
std::string format_double(double v);

// Fixed-point with `decimals` places, locale-independent.
std::string format_fixed(double v, int decimals);

// Strict full-string parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Comma-separated list, empty items dropped.
std::vector<std::string> split_list(std::string_view s);

}  // namespace layerprobe::text
