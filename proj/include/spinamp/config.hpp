#pragma once

// Sectioned key-value run configuration.
//
//   [section]
//   key = value        # or ; comments
//
// List keys (species, site, coupling, t1, segment) may repeat; any other
// key may appear once per section. Unknown sections and keys are rejected
// with the offending line number.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spinamp {

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;  // 0 for values set from the command line
};

class RunConfig {
 public:
  static RunConfig parse(std::istream& in, std::filesystem::path base_dir = {});
  static RunConfig load(const std::filesystem::path& path);

  /// Command-line override of a scalar key.
  void set(const std::string& section, const std::string& key, std::string value);
  /// Parses "section.key=value".
  void set_assignment(const std::string& assignment);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;
  std::optional<ConfigEntry> get(const std::string& section, const std::string& key) const;
  std::vector<ConfigEntry> get_all(const std::string& section, const std::string& key) const;

  std::string require_string(const std::string& section, const std::string& key) const;
  double require_double(const std::string& section, const std::string& key) const;
  long long require_int(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::optional<double> find_double(const std::string& section, const std::string& key) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;

  const std::filesystem::path& base_dir() const { return base_dir_; }

  /// Throws ConfigError on the first section or key outside `schema`.
  void validate(const std::map<std::string, std::set<std::string>>& schema) const;

 private:
  std::map<std::string, std::map<std::string, std::vector<ConfigEntry>>> sections_;
  std::map<std::string, std::size_t> section_lines_;
  std::filesystem::path base_dir_;
};

/// One swept parameter: `section.key` over a numeric grid.
struct SweepSpec {
  std::string section;
  std::string key;
  std::vector<double> values;
};

/// "start:stop:step" (inclusive of stop within step/1e9) or "a,b,c".
std::vector<double> parse_grid(const std::string& text);
/// "section.key=grid"
SweepSpec parse_sweep(const std::string& text);

}  // namespace spinamp
