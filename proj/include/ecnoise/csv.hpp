// csv.hpp -- strict comma-separated reading helpers.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ecnoise {

/// Line-by-line reader that remembers the source and line number for errors.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  /// Next non-blank line split on commas; false at end of file.
  bool next(std::vector<std::string>& fields);
  /// Reads the first line and checks it equals one of the allowed headers.
  /// Returns the index of the match.
  std::size_t expect_header(const std::vector<std::string>& allowed);

  [[noreturn]] void fail(const std::string& what) const;
  std::int64_t to_int(const std::string& field) const;
  double to_double(const std::string& field) const;

  int line() const { return line_; }

 private:
  std::ifstream in_;
  std::string origin_;
  int line_ = 0;
};

std::vector<std::string> split_commas(const std::string& line);

}  // namespace ecnoise
