#ifndef DCE_CONSTANTS_HPP
#define DCE_CONSTANTS_HPP

#include <numbers>

namespace dce::constants {

// Exact SI defining constants.
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = planck / (2.0 * std::numbers::pi);  // J s
inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);  // Wb
inline constexpr double speed_of_light = 299792458.0;     // m/s

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace dce::constants

#endif  // DCE_CONSTANTS_HPP
