#include "rotsim/lineshape.hpp"

#include <cmath>

#include "rotsim/errors.hpp"

namespace rotsim {

namespace {

// Roots of H_16 by Newton iteration on the orthonormal three-term recurrence,
// walking inward from the largest root. Machine precision without a typed-in
// table.
GaussHermite16 compute_gh16() {
    constexpr int n = 16;
    GaussHermite16 gh{};
    const double pim4 = std::pow(kPi, -0.25);

    double z = 0.0, z_prev = 0.0, pp = 0.0;
    for (int i = 0; i < n / 2; ++i) {
        switch (i) {
            case 0: z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0); break;
            case 1: z -= 1.14 * std::pow(double(n), 0.426) / z; break;
            case 2: z = 1.86 * z - 0.86 * z_prev; break;
            case 3: z = 1.91 * z - 0.91 * z_prev; break;
            default: z = 2.0 * z - z_prev; break;
        }
        for (int it = 0; it < 100; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
        }
        gh.node[n - 1 - i] = z;
        gh.node[i] = -z;
        gh.weight[n - 1 - i] = 2.0 / (pp * pp);
        gh.weight[i] = gh.weight[n - 1 - i];
        z_prev = (i == 0) ? z : gh.node[n - i];
    }
    return gh;
}

} // namespace

const GaussHermite16& gauss_hermite_16() {
    static const GaussHermite16 gh = compute_gh16();
    return gh;
}

double doppler_fwhm(const DopplerParams& p) {
    if (!(p.ion_temperature_k >= 0) || !(p.ion_mass_kg > 0) || !(p.transition_frequency_hz > 0))
        throw PhysicsError("doppler_fwhm: parameters must be positive");
    const double mc2 = p.ion_mass_kg * kSpeedOfLight * kSpeedOfLight;
    return p.transition_frequency_hz *
           std::sqrt(8.0 * std::log(2.0) * kBoltzmann * p.ion_temperature_k / mc2);
}

double line_position(const HyperfineLine& line, const MagneticField& b) {
    const double g = b.magnitude_gauss;
    return line.zero_field_offset_hz + line.zeeman_c1_hz_per_g * g +
           line.zeeman_c2_hz_per_g2 * g * g;
}

double instantaneous_thz_frequency(const FrequencyList& list, double t) {
    if (t < 0) throw PhysicsError("instantaneous_thz_frequency: negative time");
    const std::size_t n = list.entries_hz.size();
    const std::size_t k = static_cast<std::size_t>(std::floor(t / list.dwell_s)) % n;
    return list.entries_hz[k] + list.fm_amplitude_hz * std::sin(2.0 * kPi * list.fm_rate_hz * t);
}

double excitation_rate(const HyperfineLine& line, double thz_offset_hz, const MagneticField& b,
                       const DopplerParams& doppler, double peak_rate) {
    if (peak_rate < 0) throw PhysicsError("excitation_rate: negative peak rate");
    const double sigma = gaussian_sigma_from_fwhm(doppler_fwhm(doppler));
    if (!(sigma > 0)) throw PhysicsError("excitation_rate: zero Doppler width");
    const double base = peak_rate * line.weight;

    auto shape = [&](double b_gauss) {
        MagneticField f{std::abs(b_gauss), 0.0};
        const double delta = thz_offset_hz - line_position(line, f);
        const double u = delta / sigma;
        if (std::abs(u) > 38.0) return 0.0; // exp underflow guard
        return std::exp(-0.5 * u * u);
    };

    if (b.spread_gauss <= 0.0) return base * shape(b.magnitude_gauss);

    const GaussHermite16& gh = gauss_hermite_16();
    const double scale = std::sqrt(2.0) * b.spread_gauss;
    double acc = 0.0;
    for (int i = 0; i < 16; ++i)
        acc += gh.weight[i] * shape(b.magnitude_gauss + scale * gh.node[i]);
    return base * acc / std::sqrt(kPi);
}

} // namespace rotsim
