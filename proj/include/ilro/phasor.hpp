#pragma once

#include <complex>

namespace ilro {

// Polar phasor; magnitude >= 0, angle normalized to (-180, 180], zero
// magnitude always carries angle 0.
struct Phasor {
  double magnitude = 0.0;
  double angle_deg = 0.0;
};

// Throws std::domain_error on negative magnitude or non-finite input.
Phasor phasor_from_polar(double magnitude, double angle_deg);

std::complex<double> phasor_to_complex(const Phasor& p);
Phasor phasor_from_complex(const std::complex<double>& z);

Phasor phasor_add(const Phasor& a, const Phasor& b);

// wrap(a.angle - b.angle); throws std::domain_error if either magnitude is 0.
double angle_between(const Phasor& a, const Phasor& b);

}  // namespace ilro
