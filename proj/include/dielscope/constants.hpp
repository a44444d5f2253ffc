#pragma once

#include <numbers>

namespace dielscope {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m
inline constexpr double kSpeedOfLight = 299792458.0;             // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kHzPerGHz = 1e9;

}  // namespace dielscope
