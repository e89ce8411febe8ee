// keyvalue.hpp -- flat "key = value" text documents.
//
// Used for parameter files, recording metadata and provenance sidecars.
// Lines starting with '#' and blank lines are ignored; keys are unique.
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ecnoise {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyValue {
 public:
  KeyValue() = default;

  static KeyValue parse(const std::string& text, const std::string& origin = "<text>");
  static KeyValue read(const std::filesystem::path& path);

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long long integer(const std::string& key) const;

  /// Keeps insertion order for writing.
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);

  std::string str() const;
  void write(const std::filesystem::path& path) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return order_; }
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, std::string>> order_;
  std::string origin_ = "<memory>";
};

/// Round-trippable decimal rendering ("%.17g").
std::string format_double(double value);

/// Scientific rendering with 17 significant digits.
std::string format_sci(double value);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);
std::string text_digest(const std::string& text);

std::string read_text(const std::filesystem::path& path);

}  // namespace ecnoise
