#include "ilro/phasor.hpp"

#include <cmath>
#include <stdexcept>

#include "ilro/angles.hpp"

namespace ilro {

Phasor phasor_from_polar(double magnitude, double angle_deg) {
  if (!std::isfinite(magnitude) || magnitude < 0.0)
    throw std::domain_error("phasor_from_polar: magnitude must be finite and >= 0");
  if (magnitude == 0.0) return Phasor{0.0, 0.0};
  return Phasor{magnitude, wrap_angle(angle_deg)};
}

std::complex<double> phasor_to_complex(const Phasor& p) {
  return {p.magnitude * cos_deg(p.angle_deg), p.magnitude * sin_deg(p.angle_deg)};
}

Phasor phasor_from_complex(const std::complex<double>& z) {
  double mag = std::abs(z);
  if (!std::isfinite(mag)) throw std::domain_error("phasor_from_complex: non-finite value");
  if (mag == 0.0) return Phasor{0.0, 0.0};
  return Phasor{mag, wrap_angle(rad2deg(std::arg(z)))};
}

Phasor phasor_add(const Phasor& a, const Phasor& b) {
  return phasor_from_complex(phasor_to_complex(a) + phasor_to_complex(b));
}

double angle_between(const Phasor& a, const Phasor& b) {
  if (a.magnitude == 0.0 || b.magnitude == 0.0)
    throw std::domain_error("angle_between: undefined for zero-magnitude phasor");
  return wrap_angle(a.angle_deg - b.angle_deg);
}

}  // namespace ilro
