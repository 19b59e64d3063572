#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace csbc::text {

// Locale-independent number handling shared by every text format.

// Whitespace-separated fields of a line.
std::vector<std::string_view> split_fields(std::string_view line);

// Parses a full token as a double; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

// Shortest representation that reads back to the identical double.
std::string format_double(double value);

// Fixed notation with the given number of decimals.
std::string format_fixed(double value, int decimals);

// True for blank lines and '#' comments.
bool is_skippable(std::string_view line);

}  // namespace csbc::text
