#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace deepmatch {

/// Flat key=value configuration file. Blank lines and lines starting with
/// '#' are ignored; values keep interior spaces. Lookups record missing or
/// malformed entries instead of throwing, so a caller can list every problem
/// at once via check_complete().
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text,
                               const std::string& origin = "<string>");

  bool has(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback = "");
  std::string require_string(const std::string& key);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);

  const std::vector<std::string>& problems() const { return problems_; }
  void add_problem(const std::string& message);
  /// Throws ConfigError listing every recorded problem plus any unconsumed
  /// keys (typos surface as errors rather than silent defaults).
  void check_complete() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::vector<std::string> problems_;
};

}  // namespace deepmatch
