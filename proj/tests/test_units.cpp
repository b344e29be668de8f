#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "ilro/errors.hpp"
#include "ilro/units.hpp"

using namespace ilro;

TEST_CASE("frequency with SI prefixes") {
  CHECK(parse_quantity("7GHz", Unit::Hertz) == doctest::Approx(7e9));
  CHECK(parse_quantity("6.5GHz", Unit::Hertz) == doctest::Approx(6.5e9));
  CHECK(parse_quantity("250MHz", Unit::Hertz) == doctest::Approx(2.5e8));
  CHECK(parse_quantity("10kHz", Unit::Hertz) == doctest::Approx(1e4));
  CHECK(parse_quantity("42Hz", Unit::Hertz) == 42.0);
  CHECK(parse_quantity(" 7 GHz ", Unit::Hertz) == doctest::Approx(7e9));
}

TEST_CASE("capacitance, voltage, current, conductance, time") {
  CHECK(parse_quantity("100fF", Unit::Farad) == doctest::Approx(1e-13));
  CHECK(parse_quantity("2.5pF", Unit::Farad) == doctest::Approx(2.5e-12));
  CHECK(parse_quantity("0.4V", Unit::Volt) == 0.4);
  CHECK(parse_quantity("400mV", Unit::Volt) == doctest::Approx(0.4));
  CHECK(parse_quantity("1.76mA", Unit::Ampere) == doctest::Approx(1.76e-3));
  CHECK(parse_quantity("10mS", Unit::Siemens) == doctest::Approx(0.01));
  CHECK(parse_quantity("50ns", Unit::Second) == doctest::Approx(5e-8));
  CHECK(parse_quantity("1.5us", Unit::Second) == doctest::Approx(1.5e-6));
}

TEST_CASE("degrees and dimensionless") {
  CHECK(parse_quantity("86deg", Unit::Degree) == 86.0);
  CHECK(parse_quantity("-4deg", Unit::Degree) == -4.0);
  CHECK(parse_quantity("0.2", Unit::Scalar) == 0.2);
  CHECK(parse_quantity("-1e-3", Unit::Scalar) == -1e-3);
}

TEST_CASE("missing or foreign suffixes are rejected") {
  CHECK_THROWS_AS(parse_quantity("7", Unit::Hertz), ConfigError);
  CHECK_THROWS_AS(parse_quantity("7GHz", Unit::Farad), ConfigError);
  CHECK_THROWS_AS(parse_quantity("0.4Volt", Unit::Volt), ConfigError);
  CHECK_THROWS_AS(parse_quantity("0.2V", Unit::Scalar), ConfigError);
  CHECK_THROWS_AS(parse_quantity("10deg", Unit::Hertz), ConfigError);
  CHECK_THROWS_AS(parse_quantity("", Unit::Volt), ConfigError);
  CHECK_THROWS_AS(parse_quantity("GHz", Unit::Hertz), ConfigError);
  CHECK_THROWS_AS(parse_quantity("1.2.3V", Unit::Volt), ConfigError);
  CHECK_THROWS_AS(parse_quantity("nanV", Unit::Volt), ConfigError);
}

TEST_CASE("case sensitivity of prefixes") {
  CHECK(parse_quantity("1mV", Unit::Volt) == doctest::Approx(1e-3));
  CHECK(parse_quantity("1MV", Unit::Volt) == doctest::Approx(1e6));
  CHECK_THROWS_AS(parse_quantity("1gHz", Unit::Hertz), ConfigError);
}
