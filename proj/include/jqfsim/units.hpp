#pragma once

#include <numbers>

namespace jqfsim {

inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr double hbar = 1.054571817e-34;  // J s

// Configuration files carry ordinary frequencies (x/2pi, Hz); the library
// works in angular units throughout.
constexpr double angular(double hz) { return two_pi * hz; }
constexpr double hertz(double rad_per_s) { return rad_per_s / two_pi; }

}  // namespace jqfsim
