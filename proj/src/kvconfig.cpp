#include "deepmatch/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "deepmatch/errors.hpp"

namespace deepmatch {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' ||
                         s[end - 1] == '\r')) {
    --end;
  }
  return s.substr(begin, end - begin);
}

}  // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_string(text.str(), path);
}

KvConfig KvConfig::parse_string(const std::string& text,
                                const std::string& origin) {
  KvConfig config;
  config.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected key=value, got '" + stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    if (config.values_.contains(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    }
    config.values_[key] = value;
  }
  return config;
}

bool KvConfig::has(const std::string& key) const {
  return values_.contains(key);
}

std::string KvConfig::get_string(const std::string& key,
                                 const std::string& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KvConfig::require_string(const std::string& key) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    problems_.push_back("missing required key '" + key + "'");
    return "";
  }
  return it->second;
}

std::uint64_t KvConfig::get_u64(const std::string& key,
                                std::uint64_t fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t value = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    problems_.push_back("key '" + key + "': '" + s +
                        "' is not a non-negative integer");
    return fallback;
  }
  return value;
}

double KvConfig::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double value = 0.0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    problems_.push_back("key '" + key + "': '" + s + "' is not a real number");
    return fallback;
  }
  return value;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  problems_.push_back("key '" + key + "': '" + it->second +
                      "' is not a boolean (true/false/1/0)");
  return fallback;
}

void KvConfig::add_problem(const std::string& message) {
  problems_.push_back(message);
}

void KvConfig::check_complete() const {
  std::vector<std::string> all = problems_;
  for (const auto& [key, value] : values_) {
    if (!consumed_.contains(key)) {
      all.push_back("unknown key '" + key + "'");
    }
  }
  if (!all.empty()) {
    std::string msg = origin_ + ": invalid configuration:";
    for (const std::string& p : all) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
}

}  // namespace deepmatch
