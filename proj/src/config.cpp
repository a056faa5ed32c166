#include "exlg/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "exlg/error.hpp"

namespace exlg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool to_double(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && p == e;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  auto error = [&](const std::string& what) {
    std::ostringstream os;
    os << source << ":" << lineno << ": " << what;
    throw ConfigError(os.str());
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') error("unterminated section header '" + line + "'");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) error("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) error("expected 'key = value', got '" + line + "'");
    const std::string key = lower(trim(line.substr(0, eq)));
    if (key.empty()) error("missing key before '='");
    if (section.empty()) error("key '" + key + "' appears before any [section]");
    const std::string full = section + "." + key;
    if (c.entries_.count(full)) error("duplicate key '" + full + "'");
    c.entries_[full] = {trim(line.substr(eq + 1)), lineno};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, std::string value) { entries_[lower(trim(key))] = {std::move(value), 0}; }

const Config::Entry& Config::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
  return it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const Entry& e = at(key);
  std::ostringstream os;
  os << source_;
  if (e.line > 0) os << ":" << e.line;
  os << ": " << key << " = '" << e.value << "': " << what;
  throw ConfigError(os.str());
}

std::string Config::get_string(const std::string& key) const { return at(key).value; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? at(key).value : fallback;
}

double Config::get_double(const std::string& key) const {
  double v;
  if (!to_double(at(key).value, v)) fail(key, "expected a number");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  const std::string v = lower(at(key).value);
  if (v.empty() || v == "auto" || v == "none") return std::nullopt;
  return get_double(key);
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& s = at(key).value;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(key, "expected an integer");
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string& s = at(key).value;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) fail(key, "expected an unsigned 64-bit integer");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = lower(at(key).value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(key, "expected true or false");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(at(key).value, ',')) {
    double v;
    if (!to_double(item, v)) fail(key, "'" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  return split(at(key).value, ',');
}

void Config::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& [key, e] : entries_) {
    if (std::find(known.begin(), known.end(), key) != known.end()) continue;
    std::ostringstream os;
    os << source_;
    if (e.line > 0) os << ":" << e.line;
    os << ": unknown key '" << key << "'";
    throw ConfigError(os.str());
  }
}

std::string Config::to_text() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, e] : entries_) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << key.substr(dot + 1) << " = " << e.value << "\n";
  }
  return os.str();
}

}  // namespace exlg
