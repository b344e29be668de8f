#include "ilro/angles.hpp"

#include <cmath>
#include <stdexcept>

namespace ilro {

double wrap_angle(double deg) {
  if (!std::isfinite(deg)) throw std::domain_error("wrap_angle: non-finite angle");
  double r = std::remainder(deg, 360.0);  // [-180, 180]
  if (r <= -180.0) r += 360.0;
  return r;
}

double deg2rad(double deg) { return deg * (kPi / 180.0); }

double rad2deg(double rad) { return rad * (180.0 / kPi); }

double sin_deg(double deg) {
  if (!std::isfinite(deg)) throw std::domain_error("sin_deg: non-finite angle");
  double r = std::remainder(deg, 360.0);
  if (r > 90.0)
    r = 180.0 - r;
  else if (r < -90.0)
    r = -180.0 - r;
  return std::sin(deg2rad(r));
}

double cos_deg(double deg) {
  if (!std::isfinite(deg)) throw std::domain_error("cos_deg: non-finite angle");
  return sin_deg(90.0 - deg);
}

}  // namespace ilro
