#pragma once

namespace ilro {

inline constexpr double kPi = 3.14159265358979323846;

// Normalizes an angle in degrees to (-180, 180]; throws std::domain_error on
// non-finite input.
double wrap_angle(double deg);

double deg2rad(double deg);
double rad2deg(double rad);

// Degree-argument trig, exact at quadrant multiples (sin_deg(180) == 0.0).
double sin_deg(double deg);
double cos_deg(double deg);

}  // namespace ilro
