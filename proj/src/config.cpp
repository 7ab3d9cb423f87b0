#include "spinamp/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "spinamp/error.hpp"
#include "text.hpp"

namespace spinamp {

namespace {

const std::set<std::string> kListKeys{"species", "site", "coupling", "t1", "segment"};

std::string where(const std::string& section, const std::string& key) { return "'" + key + "' in [" + section + "]"; }

}  // namespace

RunConfig RunConfig::parse(std::istream& in, std::filesystem::path base_dir) {
  RunConfig cfg;
  cfg.base_dir_ = std::move(base_dir);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = text::trim(text::strip_comment(raw));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError("unterminated section header", line);
      section = std::string(text::trim(body.substr(1, body.size() - 2)));
      if (section.empty()) throw ConfigError("empty section name", line);
      if (cfg.section_lines_.count(section)) throw ConfigError("duplicate section [" + section + "]", line);
      cfg.section_lines_[section] = line;
      cfg.sections_[section];
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line);
    if (section.empty()) throw ConfigError("key outside of any section", line);
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string value(text::trim(body.substr(eq + 1)));
    if (key.empty()) throw ConfigError("empty key", line);
    auto& slot = cfg.sections_[section][key];
    if (!slot.empty() && !kListKeys.count(key)) throw ConfigError("duplicate key " + where(section, key), line);
    slot.push_back({value, line});
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse(in, path.parent_path());
}

void RunConfig::set(const std::string& section, const std::string& key, std::string value) {
  auto& slot = sections_[section][key];
  slot.clear();
  slot.push_back({std::move(value), 0});
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override must look like section.key=value, got '" + assignment + "'");
  set(std::string(text::trim(assignment.substr(0, dot))), std::string(text::trim(assignment.substr(dot + 1, eq - dot - 1))),
      std::string(text::trim(assignment.substr(eq + 1))));
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) && !s->second.at(key).empty();
}

bool RunConfig::has_section(const std::string& section) const { return sections_.count(section) != 0; }

std::optional<ConfigEntry> RunConfig::get(const std::string& section, const std::string& key) const {
  if (!has(section, key)) return std::nullopt;
  return sections_.at(section).at(key).back();
}

std::vector<ConfigEntry> RunConfig::get_all(const std::string& section, const std::string& key) const {
  if (!has(section, key)) return {};
  return sections_.at(section).at(key);
}

std::string RunConfig::require_string(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key " + where(section, key));
  return e->value;
}

double RunConfig::require_double(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key " + where(section, key));
  return text::to_double(e->value, e->line, where(section, key));
}

long long RunConfig::require_int(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key " + where(section, key));
  // Accept integral floats such as "200" or "2e2" coming from sweep grids.
  const double v = text::to_double(e->value, e->line, where(section, key));
  if (v != std::floor(v) || std::abs(v) > 9e15)
    throw ConfigError("expected an integer for " + where(section, key) + ", got '" + e->value + "'", e->line);
  return static_cast<long long>(v);
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? require_double(section, key) : fallback;
}

std::optional<double> RunConfig::find_double(const std::string& section, const std::string& key) const {
  if (!has(section, key)) return std::nullopt;
  return require_double(section, key);
}

long long RunConfig::get_int(const std::string& section, const std::string& key, long long fallback) const {
  return has(section, key) ? require_int(section, key) : fallback;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? require_string(section, key) : fallback;
}

void RunConfig::validate(const std::map<std::string, std::set<std::string>>& schema) const {
  for (const auto& [section, keys] : sections_) {
    const auto allowed = schema.find(section);
    if (allowed == schema.end()) {
      const auto l = section_lines_.find(section);
      throw ConfigError("unknown section [" + section + "]", l == section_lines_.end() ? 0 : l->second);
    }
    for (const auto& [key, entries] : keys) {
      if (!allowed->second.count(key))
        throw ConfigError("unknown key " + where(section, key), entries.empty() ? 0 : entries.front().line);
    }
  }
}

std::vector<double> parse_grid(const std::string& raw) {
  const std::string s(text::trim(raw));
  std::vector<double> out;
  if (s.empty()) throw ConfigError("empty sweep");
  if (s.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
      const auto c = s.find(':', start);
      parts.push_back(text::to_double(s.substr(start, c - start), 0, "grid bound"));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (parts.size() != 3) throw ConfigError("range grid must be start:stop:step");
    const double a = parts[0], b = parts[1], h = parts[2];
    if (!(h > 0.0)) throw ConfigError("grid step must be > 0");
    if (b < a) throw ConfigError("empty sweep: stop is below start");
    const auto count = static_cast<long long>(std::floor((b - a) / h * (1.0 + 1e-12) + 1e-9)) + 1;
    for (long long k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * h);
  } else {
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto c = s.find(',', start);
      const auto item = text::trim(std::string_view(s).substr(start, c == std::string::npos ? std::string::npos : c - start));
      if (!item.empty()) out.push_back(text::to_double(item, 0, "grid value"));
      if (c == std::string::npos) break;
      start = c + 1;
    }
  }
  if (out.empty()) throw ConfigError("empty sweep");
  return out;
}

SweepSpec parse_sweep(const std::string& raw) {
  const auto eq = raw.find('=');
  const auto dot = raw.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("sweep must look like section.key=grid, got '" + raw + "'");
  SweepSpec spec;
  spec.section = std::string(text::trim(raw.substr(0, dot)));
  spec.key = std::string(text::trim(raw.substr(dot + 1, eq - dot - 1)));
  spec.values = parse_grid(raw.substr(eq + 1));
  return spec;
}

}  // namespace spinamp
