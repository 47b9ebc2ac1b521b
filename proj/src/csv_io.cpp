#include "grinent/csv_io.hpp"

#include <charconv>
#include <istream>
#include <sstream>

#include "grinent/errors.hpp"

namespace grinent::csv {

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void chomp(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace

std::vector<Row> read_table(std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      if (fields != header) {
        std::string expected;
        for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + header[i];
        throw ParseError("unexpected header, expected '" + expected + "'", lineno);
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    }
    rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw ParseError("empty input: no header line");
  return rows;
}

double parse_real(const std::string& field, int line, std::string_view column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("invalid number '" + field + "' in column " + std::string(column), line);
  }
  return v;
}

long long parse_count(const std::string& field, int line, std::string_view column) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty() || v < 0) {
    throw ParseError("invalid count '" + field + "' in column " + std::string(column), line);
  }
  return v;
}

}  // namespace grinent::csv
