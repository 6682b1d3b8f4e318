#pragma once

#include <numbers>

namespace qong {

// CODATA fixed values, SI
inline constexpr double c_light = 299792458.0;
inline constexpr double hbar    = 1.054571817e-34;
inline constexpr double eps0    = 8.8541878128e-12;

inline constexpr double pi = std::numbers::pi;

// 1 deg/h expressed in rad/s
inline constexpr double deg_per_hour = pi / (180.0 * 3600.0);

inline constexpr double rad_s_to_deg_h(double x) { return x / deg_per_hour; }
inline constexpr double deg_h_to_rad_s(double x) { return x * deg_per_hour; }

} // namespace qong
