#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gazesa::csv {

// Splits one line on commas. Quoting is not supported; none of the formats
// here carry free text.
std::vector<std::string_view> split(std::string_view line);

// Reads the next non-empty line (strips a trailing '\r'). Returns false at EOF.
bool next_line(std::istream& in, std::string& line);

// Strict full-field parse. Leading/trailing spaces are rejected.
std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);
void write_double(std::ostream& out, double value);

std::string join(const std::vector<std::string>& parts, char sep = ',');

}  // namespace gazesa::csv
