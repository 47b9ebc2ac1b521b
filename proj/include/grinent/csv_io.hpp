#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace grinent::csv {

// Shortest-round-trip text for a double ('.' decimal separator, locale independent).
std::string format_real(double value);

struct Row {
  int line;  // 1-based line number in the source
  std::vector<std::string> fields;
};

// Reads a comma-separated table whose first line must equal `header` exactly
// (after trimming a trailing '\r'). Blank lines are skipped. Every row must
// have as many fields as the header.
std::vector<Row> read_table(std::istream& in, const std::vector<std::string>& header);

double parse_real(const std::string& field, int line, std::string_view column);
long long parse_count(const std::string& field, int line, std::string_view column);

}  // namespace grinent::csv
