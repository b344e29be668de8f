#include "ilro/units.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include "ilro/errors.hpp"

namespace ilro {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool si_prefix(char c, double* factor) {
  switch (c) {
    case 'f': *factor = 1e-15; return true;
    case 'p': *factor = 1e-12; return true;
    case 'n': *factor = 1e-9; return true;
    case 'u': *factor = 1e-6; return true;
    case 'm': *factor = 1e-3; return true;
    case 'k': *factor = 1e3; return true;
    case 'M': *factor = 1e6; return true;
    case 'G': *factor = 1e9; return true;
    case 'T': *factor = 1e12; return true;
    default: return false;
  }
}

}  // namespace

const char* unit_symbol(Unit unit) {
  switch (unit) {
    case Unit::Hertz: return "Hz";
    case Unit::Farad: return "F";
    case Unit::Volt: return "V";
    case Unit::Ampere: return "A";
    case Unit::Siemens: return "S";
    case Unit::Second: return "s";
    case Unit::Degree: return "deg";
    case Unit::Scalar: return "";
  }
  return "";
}

double parse_quantity(std::string_view text, Unit unit) {
  std::string_view s = trim(text);
  if (s.empty()) throw ConfigError("empty quantity");

  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr == first)
    throw ConfigError("malformed number in quantity '" + std::string(text) + "'");
  if (!std::isfinite(value))
    throw ConfigError("non-finite quantity '" + std::string(text) + "'");

  std::string_view suffix = trim(std::string_view(ptr, static_cast<size_t>(last - ptr)));
  const std::string_view symbol = unit_symbol(unit);

  if (unit == Unit::Scalar) {
    if (!suffix.empty())
      throw ConfigError("quantity '" + std::string(text) + "' must be dimensionless");
    return value;
  }
  if (suffix.empty())
    throw ConfigError("quantity '" + std::string(text) + "' is missing its '" +
                      std::string(symbol) + "' unit suffix");
  if (suffix == symbol) return value;

  double factor = 0.0;
  if (unit != Unit::Degree && suffix.size() == symbol.size() + 1 &&
      suffix.substr(1) == symbol && si_prefix(suffix.front(), &factor))
    return value * factor;

  throw ConfigError("quantity '" + std::string(text) + "' has unit '" + std::string(suffix) +
                    "', expected '" + std::string(symbol) + "'");
}

}  // namespace ilro
