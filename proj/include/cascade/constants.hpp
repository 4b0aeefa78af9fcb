#ifndef CASCADE_CONSTANTS_HPP
#define CASCADE_CONSTANTS_HPP

#include <numbers>

namespace cascade::constants
{

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018, SI units.
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double k_boltzmann = 1.380649e-23;      // J / K
inline constexpr double speed_of_light = 299792458.0;    // m / s
inline constexpr double gravitational = 6.67430e-11;     // m^3 / (kg s^2)

} // namespace cascade::constants
#endif // CASCADE_CONSTANTS_HPP
