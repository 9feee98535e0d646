#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wildfire {

// Shortest representation that parses back to the same double.
std::string format_double(double v);

// Fixed number of decimals, for human-readable tables.
std::string format_fixed(double v, int decimals);

// Whole-field parse; leading/trailing blanks are ignored. nullopt on any junk.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

std::string_view trim(std::string_view s);

// Splits one CSV record (RFC 4180 quoting). Throws Error(Format) on a
// malformed quote.
std::vector<std::string> split_csv_line(const std::string& line);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace wildfire
