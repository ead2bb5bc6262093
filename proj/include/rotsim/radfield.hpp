#pragma once

#include <vector>

#include "rotsim/constants.hpp"

namespace rotsim {

// Spontaneous emission rates A(N -> N-1) within v=0, indexed so that
// a_per_s[N-1] is the rate out of level N. Covers at least N=1..6.
struct EinsteinSet {
    std::vector<double> a_per_s;

    double a(int n_upper) const; // A(n_upper -> n_upper-1), throws if missing
    int max_n() const { return static_cast<int>(a_per_s.size()); }
};

// Default set: A(1->0) reproduces a 0.09/s ground-state absorption rate and
// A(2->1) a 0.06/s spontaneous rate in the 300 K field; higher levels follow
// the rigid-rotor f^3-dipole scaling of A(2->1). Effective values, not
// ab-initio.
EinsteinSet default_einstein_set();

struct ThermalEnvironment {
    double temperature_k = 300.0;
    double rotational_constant_hz = kReferenceFrequencyHz / 2.0; // rigid rotor
};

// Mean photon number 1/(exp(hf/kT) - 1); 0 at T = 0.
double planck_occupancy(double frequency_hz, double temperature_k);

// Rigid-rotor transition frequency between N and N-1: 2*B*N.
double rotational_gap_hz(const ThermalEnvironment& env, int n_upper);

struct BbrRates {
    double absorption;  // lower -> upper, per molecule in the lower manifold
    double stimulated;  // upper -> lower
    double spontaneous; // upper -> lower
};

// Manifold-level BBR rates for one N <-> N-1 pair:
//   spontaneous = A, stimulated = A*nbar, absorption = A*nbar*(g_up/g_low).
BbrRates bbr_rates(double a_per_s, double transition_frequency_hz, double temperature_k,
                   int lower_deg, int upper_deg);

// Boltzmann populations p_0..p_nmax of the rotational ladder, normalized to
// 1. Throws PhysicsError when the truncated tail would exceed 1e-3.
std::vector<double> thermal_rotational_populations(const ThermalEnvironment& env, int n_max);

} // namespace rotsim
