#pragma once

#include <string>
#include <string_view>

namespace ilro {

enum class Unit { Hertz, Farad, Volt, Ampere, Siemens, Second, Degree, Scalar };

const char* unit_symbol(Unit unit);

// Parses "7GHz", "100fF", "0.4V", "86deg", "0.12" (Scalar only) into SI base
// units. The unit suffix is mandatory except for Scalar, where any suffix is
// an error. Throws ConfigError on malformed text or a foreign suffix.
double parse_quantity(std::string_view text, Unit unit);

}  // namespace ilro
