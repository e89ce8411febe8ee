#include "ecnoise/csv.hpp"

#include <charconv>
#include <cmath>

#include "ecnoise/keyvalue.hpp"

namespace ecnoise {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

CsvReader::CsvReader(const std::filesystem::path& path) : in_(path), origin_(path.string()) {
  if (!in_) throw FormatError(origin_ + ": cannot open");
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    fields = split_commas(text);
    return true;
  }
  return false;
}

std::size_t CsvReader::expect_header(const std::vector<std::string>& allowed) {
  std::vector<std::string> fields;
  if (!next(fields)) fail("empty file, expected header \"" + allowed.front() + "\"");
  std::string joined;
  for (std::size_t i = 0; i < fields.size(); ++i) joined += (i ? "," : "") + fields[i];
  for (std::size_t i = 0; i < allowed.size(); ++i) {
    if (joined == allowed[i]) return i;
  }
  fail("unexpected header \"" + joined + "\", expected \"" + allowed.front() + "\"");
}

void CsvReader::fail(const std::string& what) const {
  throw FormatError(origin_ + ":" + std::to_string(line_) + ": " + what);
}

std::int64_t CsvReader::to_int(const std::string& field) const {
  std::int64_t v = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) fail("bad integer \"" + field + "\"");
  return v;
}

double CsvReader::to_double(const std::string& field) const {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail("bad number \"" + field + "\"");
  }
  return v;
}

}  // namespace ecnoise
