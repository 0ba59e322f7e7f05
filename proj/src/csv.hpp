#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace arpps::csv {

using Row = std::vector<std::string>;

/// Splits RFC-4180 style text into rows. Accepts LF or CRLF line ends and
/// quoted fields with doubled quotes. A trailing empty line is ignored.
std::vector<Row> parse(std::string_view text);

void append_field(std::string& out, std::string_view field);
void append_row(std::string& out, const Row& row);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
std::string format_int(std::int64_t v);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, std::int64_t& out);

}  // namespace arpps::csv
