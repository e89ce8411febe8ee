#include "ecnoise/keyvalue.hpp"

#include <cerrno>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ecnoise {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValue KeyValue::parse(const std::string& text, const std::string& origin) {
  KeyValue kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw FormatError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw FormatError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.contains(key)) {
      throw FormatError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.set(key, value);
  }
  return kv;
}

KeyValue KeyValue::read(const std::filesystem::path& path) {
  return parse(read_text(path), path.string());
}

const std::string& KeyValue::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw FormatError(origin_ + ": missing key '" + key + "'");
  return it->second;
}

std::optional<std::string> KeyValue::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KeyValue::number(const std::string& key) const {
  const std::string& text = get(key);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || errno == ERANGE) {
    throw FormatError(origin_ + ": key '" + key + "' is not a number: '" + text + "'");
  }
  return v;
}

double KeyValue::number_or(const std::string& key, double fallback) const {
  return contains(key) ? number(key) : fallback;
}

long long KeyValue::integer(const std::string& key) const {
  const std::string& text = get(key);
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0' || errno == ERANGE) {
    throw FormatError(origin_ + ": key '" + key + "' is not an integer: '" + text + "'");
  }
  return v;
}

void KeyValue::set(const std::string& key, const std::string& value) {
  auto [it, inserted] = values_.insert_or_assign(key, value);
  if (inserted) {
    order_.emplace_back(key, value);
  } else {
    for (auto& entry : order_) {
      if (entry.first == key) entry.second = value;
    }
  }
}

void KeyValue::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValue::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::string KeyValue::str() const {
  std::string out;
  for (const auto& [key, value] : order_) out += key + " = " + value + "\n";
  return out;
}

void KeyValue::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << str();
}

// Shortest text that parses back to the same double.
std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string format_sci(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
  return std::string(buf, res.ptr);
}

std::string text_digest(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string file_digest(const std::filesystem::path& path) { return text_digest(read_text(path)); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ecnoise
