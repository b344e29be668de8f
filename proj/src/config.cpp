#include "ilro/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ilro/errors.hpp"

namespace ilro {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(buf.str(), path.string());
}

Config Config::from_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto at = [&] { return origin + ":" + std::to_string(lineno); };
    size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(at() + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(at() + ": empty section name");
      cfg.sections_[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at() + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(at() + ": key outside any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(at() + ": empty key");
    auto [it, inserted] = cfg.sections_[section].emplace(key, Entry{value});
    (void)it;
    if (!inserted) throw ConfigError(at() + ": duplicate key '" + section + "." + key + "'");
  }
  return cfg;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  k->second.used = true;
  return &k->second;
}

const Config::Entry& Config::require(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) throw ConfigError(origin_ + ": missing key '" + section + "." + key + "'");
  return *e;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

double Config::quantity(const std::string& section, const std::string& key, Unit unit) const {
  try {
    return parse_quantity(require(section, key).value, unit);
  } catch (const ConfigError& e) {
    throw ConfigError(origin_ + ": key '" + section + "." + key + "': " + e.what());
  }
}

double Config::quantity_or(const std::string& section, const std::string& key, Unit unit,
                           double fallback) const {
  if (!has(section, key)) return fallback;
  return quantity(section, key, unit);
}

std::vector<double> Config::quantity_list(const std::string& section, const std::string& key,
                                          Unit unit) const {
  const std::string& raw = require(section, key).value;
  std::vector<double> out;
  std::string item;
  std::istringstream in(raw);
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(parse_quantity(item, unit));
    } catch (const ConfigError& e) {
      throw ConfigError(origin_ + ": key '" + section + "." + key + "': " + e.what());
    }
  }
  if (out.empty()) throw ConfigError(origin_ + ": key '" + section + "." + key + "' is empty");
  return out;
}

long Config::integer(const std::string& section, const std::string& key) const {
  const std::string value = trim(require(section, key).value);
  long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError(origin_ + ": key '" + section + "." + key + "' is not an integer");
  return v;
}

long Config::integer_or(const std::string& section, const std::string& key, long fallback) const {
  if (!has(section, key)) return fallback;
  return integer(section, key);
}

std::string Config::text(const std::string& section, const std::string& key) const {
  return require(section, key).value;
}

std::string Config::text_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return text(section, key);
}

void Config::finish() const {
  std::string unknown;
  for (const auto& [sname, keys] : sections_)
    for (const auto& [kname, entry] : keys)
      if (!entry.used) unknown += (unknown.empty() ? "" : ", ") + sname + "." + kname;
  if (!unknown.empty())
    throw ConfigError(origin_ + ": unknown key(s): " + unknown);
}

}  // namespace ilro
