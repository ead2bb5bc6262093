#pragma once

namespace rotsim {

// CODATA 2018; h, k and c are exact by definition of the SI.
inline constexpr double kPlanck        = 6.62607015e-34;    // J s
inline constexpr double kBoltzmann     = 1.380649e-23;      // J / K
inline constexpr double kSpeedOfLight  = 299792458.0;       // m / s
inline constexpr double kAtomicMassU   = 1.66053906660e-27; // kg

// HD+ defaults
inline constexpr double kHdPlusMassU = 3.02151; // u
// (v=0,N=0) -> (v'=0,N'=1) spinless transition frequency, Hz
inline constexpr double kReferenceFrequencyHz = 1.314925752e12;

inline constexpr double kPi = 3.14159265358979323846;

} // namespace rotsim
