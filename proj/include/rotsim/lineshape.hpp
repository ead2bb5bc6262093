#pragma once

#include <array>

#include "rotsim/constants.hpp"
#include "rotsim/levelcat.hpp"

namespace rotsim {

struct DopplerParams {
    double ion_temperature_k;
    double ion_mass_kg = kHdPlusMassU * kAtomicMassU;
    double transition_frequency_hz = kReferenceFrequencyHz;
};

// Static field magnitude plus an optional Gaussian spread modeling spatial
// inhomogeneity over the ion ensemble.
struct MagneticField {
    double magnitude_gauss = 0.0;
    double spread_gauss = 0.0;
};

// Thermal FWHM f0 * sqrt(8 ln2 kT / (m c^2)).
double doppler_fwhm(const DopplerParams& p);

inline double gaussian_sigma_from_fwhm(double fwhm) {
    return fwhm / 2.3548200450309493; // 2 sqrt(2 ln 2)
}

// Line offset from the reference frequency at field strength b:
// zero_field_offset + c1*B + c2*B^2.
double line_position(const HyperfineLine& line, const MagneticField& b);

// THz offset emitted at time t (seconds since the list started): the list is
// cycled entry by entry with the configured dwell, with sinusoidal FM on top.
double instantaneous_thz_frequency(const FrequencyList& list, double t);

// Doppler-broadened excitation rate of one line for a THz wave at thz_offset:
// peak_rate * weight * exp(-delta^2 / 2 sigma^2). A field spread is folded in
// by 16-point Gauss-Hermite quadrature over B.
double excitation_rate(const HyperfineLine& line, double thz_offset_hz, const MagneticField& b,
                       const DopplerParams& doppler, double peak_rate);

// Gauss-Hermite abscissas/weights (physicists' convention, n=16).
struct GaussHermite16 {
    std::array<double, 16> node;
    std::array<double, 16> weight;
};
const GaussHermite16& gauss_hermite_16();

} // namespace rotsim
