#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rotsim {

// Rotational level within a vibrational state. energy_offset_hz is the
// frequency-equivalent energy relative to (v=0,N=0).
struct RoVibLevel {
    int v = 0;
    int n = 0;
    double energy_offset_hz = 0.0;
};

// Hyperfine state labeled by the (in part approximate) quantum numbers
// (F,S,J). Degeneracy over magnetic substates is 2J+1.
struct HyperfineState {
    RoVibLevel level;
    int f = 0;
    int s = 0;
    int j = 0;

    int degeneracy() const { return 2 * j + 1; }
    bool same_fsj(int f_, int s_, int j_) const { return f == f_ && s == s_ && j == j_; }
};

// The four hyperfine states of (v=0,N=0) in a fixed canonical order; the
// degeneracies 1+3+3+5 sum to the 12 magnetic substates.
std::array<HyperfineState, 4> ground_hyperfine_states();

// The ten hyperfine states of (v'=0,N'=1); degeneracies sum to 36.
std::array<HyperfineState, 10> excited_hyperfine_states();

enum class Polarization { Pi, Sigma };

// One electric-dipole component of the rotational transition. The position
// in a magnetic field B (gauss) is
//   zero_field_offset + c1*B + c2*B^2     (offset from the reference frequency)
struct HyperfineLine {
    HyperfineState lower;
    HyperfineState upper;
    std::optional<int> lower_jz;
    std::optional<int> upper_jz;
    double zero_field_offset_hz = 0.0;
    double zeeman_c1_hz_per_g = 0.0;
    double zeeman_c2_hz_per_g2 = 0.0;
    Polarization polarization = Polarization::Pi;
    double weight = 1.0; // relative line strength
    bool targeted = false;
};

// A named set of THz excitation frequencies, cycled with a fixed dwell per
// entry and a slow sinusoidal FM.
struct FrequencyList {
    std::string name;
    std::vector<double> entries_hz; // offsets from the reference frequency
    double dwell_s = 0.200;
    double fm_amplitude_hz = 2.0e3;
    double fm_rate_hz = 5.0;
    double total_duration_s = 0.0; // one full pass unless set otherwise

    double pass_duration() const { return dwell_s * static_cast<double>(entries_hz.size()); }
};

struct Catalog {
    double reference_frequency_hz;
    std::vector<HyperfineLine> lines;
    std::vector<FrequencyList> lists;

    const FrequencyList& list(const std::string& name) const;
    const FrequencyList* find_list(const std::string& name) const;
    std::vector<const HyperfineLine*> targeted() const;
};

// The seven excitation lists (A', A, B, C, D, E, detuned500) with default
// dwell/FM parameters.
std::vector<FrequencyList> builtin_lists();

// Bundled HD+ line data plus the builtin lists.
Catalog builtin_catalog();

// Text catalog I/O. load_catalog validates all invariants and throws
// ConfigError on malformed or inconsistent files.
Catalog load_catalog(const std::string& path);
Catalog parse_catalog(std::istream& in, const std::string& origin);
void save_catalog(const Catalog& catalog, const std::string& path);
void write_catalog(const Catalog& catalog, std::ostream& out);

void validate_catalog(const Catalog& catalog);

// Pairs each list entry with the catalog lines lying within tolerance of it
// at field strength b_gauss. Empty result is fine.
struct TargetedPair {
    std::size_t entry_index;
    double entry_hz;
    const HyperfineLine* line;
    double position_hz;
};
std::vector<TargetedPair> targeted_lines(const Catalog& catalog, const FrequencyList& list,
                                         double b_gauss, double tolerance_hz);

// Canonical entry-list name normalization: accepts "Aprime" for "A'" and the
// bare "500" for "detuned500".
std::string normalize_list_name(const std::string& name);

} // namespace rotsim
