#include "rotsim/radfield.hpp"

#include <cmath>

#include "rotsim/errors.hpp"

namespace rotsim {

double EinsteinSet::a(int n_upper) const {
    if (n_upper < 1 || n_upper > max_n())
        throw PhysicsError("EinsteinSet: no A coefficient for N=" + std::to_string(n_upper));
    return a_per_s[n_upper - 1];
}

EinsteinSet default_einstein_set() {
    // A(1->0) = 0.09 / (3 * nbar(f0, 300 K)); A(2->1) anchored to the quoted
    // 0.06/s; A(N->N-1) for N>=3 scaled as N^4/(2N+1) from A(2->1).
    const double a10 = 0.09 / (3.0 * planck_occupancy(kReferenceFrequencyHz, 300.0));
    const double a21 = 0.06;
    EinsteinSet set;
    set.a_per_s = {a10, a21};
    for (int n = 3; n <= 7; ++n) {
        const double scale = (std::pow(n, 4) / (2.0 * n + 1.0)) / (16.0 / 5.0);
        set.a_per_s.push_back(a21 * scale);
    }
    return set;
}

double planck_occupancy(double frequency_hz, double temperature_k) {
    if (!(frequency_hz > 0)) throw PhysicsError("planck_occupancy: frequency must be positive");
    if (temperature_k < 0) throw PhysicsError("planck_occupancy: negative temperature");
    if (temperature_k == 0.0) return 0.0;
    const double x = kPlanck * frequency_hz / (kBoltzmann * temperature_k);
    return 1.0 / std::expm1(x);
}

double rotational_gap_hz(const ThermalEnvironment& env, int n_upper) {
    return 2.0 * env.rotational_constant_hz * n_upper;
}

BbrRates bbr_rates(double a_per_s, double transition_frequency_hz, double temperature_k,
                   int lower_deg, int upper_deg) {
    if (lower_deg <= 0 || upper_deg <= 0) throw PhysicsError("bbr_rates: degeneracies must be positive");
    const double nbar = planck_occupancy(transition_frequency_hz, temperature_k);
    BbrRates r;
    r.spontaneous = a_per_s;
    r.stimulated = a_per_s * nbar;
    r.absorption = a_per_s * nbar * static_cast<double>(upper_deg) / static_cast<double>(lower_deg);
    return r;
}

std::vector<double> thermal_rotational_populations(const ThermalEnvironment& env, int n_max) {
    if (n_max < 1) throw PhysicsError("thermal populations: n_max must be >= 1");
    if (!(env.temperature_k >= 0) || !(env.rotational_constant_hz > 0))
        throw PhysicsError("thermal populations: bad environment");

    auto weight = [&env](int n) {
        if (env.temperature_k == 0.0) return n == 0 ? 1.0 : 0.0;
        const double e = env.rotational_constant_hz * n * (n + 1);
        return (2.0 * n + 1.0) * std::exp(-kPlanck * e / (kBoltzmann * env.temperature_k));
    };

    std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
    double total = 0.0;
    for (int n = 0; n <= n_max; ++n) total += (w[n] = weight(n));

    // Truncation audit: the next 20 levels must hold < 1e-3 of the total.
    double tail = 0.0;
    for (int n = n_max + 1; n <= n_max + 20; ++n) tail += weight(n);
    if (tail >= 1.0e-3 * (total + tail))
        throw PhysicsError("thermal populations: truncation tail above 1e-3 at n_max=" +
                           std::to_string(n_max));

    for (double& v : w) v /= total;
    return w;
}

} // namespace rotsim
