#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ilro/units.hpp"

namespace ilro {

// Strict INI reader: [section] headers, key = value pairs, '#'/';' comments.
// Duplicate keys are errors. Every key must be consumed by an accessor before
// finish(), which rejects unknown keys.
class Config {
 public:
  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  double quantity(const std::string& section, const std::string& key, Unit unit) const;
  double quantity_or(const std::string& section, const std::string& key, Unit unit,
                     double fallback) const;
  // Comma-separated list of quantities, all with the same unit.
  std::vector<double> quantity_list(const std::string& section, const std::string& key,
                                    Unit unit) const;
  long integer(const std::string& section, const std::string& key) const;
  long integer_or(const std::string& section, const std::string& key, long fallback) const;
  std::string text(const std::string& section, const std::string& key) const;
  std::string text_or(const std::string& section, const std::string& key,
                      const std::string& fallback) const;

  // Throws ConfigError naming every key no accessor consumed.
  void finish() const;

 private:
  struct Entry {
    std::string value;
    mutable bool used = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  const Entry& require(const std::string& section, const std::string& key) const;

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string origin_;
};

}  // namespace ilro
