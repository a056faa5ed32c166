#pragma once

// Flat INI-style configuration:
//
//   # comment
//   [section]
//   key = value
//
// Keys are addressed as "section.key". Values are kept as text and converted on
// access; every conversion error names the file line.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace exlg {

class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;  // 0 for values set programmatically
  };

  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  /// Keys are trimmed and lower-cased, as in files.
  void set(const std::string& key, std::string value);
  void erase(const std::string& key) { entries_.erase(key); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of numbers.
  std::vector<double> get_doubles(const std::string& key) const;
  /// Comma-separated list of words.
  std::vector<std::string> get_strings(const std::string& key) const;

  /// Throws ConfigError listing any key not in `known` (catches typos).
  void reject_unknown(const std::vector<std::string>& known) const;

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

  /// Canonical text form (sorted by section and key).
  std::string to_text() const;

 private:
  const Entry& at(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::map<std::string, Entry> entries_;
  std::string source_;
};

}  // namespace exlg
