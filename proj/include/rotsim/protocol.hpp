#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rotsim/kinetics.hpp"
#include "rotsim/levelcat.hpp"
#include "rotsim/rng.hpp"

namespace rotsim {

enum class Method { I, II };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct Phase {
    std::string label;
    double start_s = 0.0;
    double duration_s = 0.0;
    RadiationFlags flags;
    std::optional<FrequencyList> thz_list; // active when flags.thz
    double ion_temperature_k = 0.0;

    double end_s() const { return start_s + duration_s; }
};

struct ProtocolTimeline {
    Method method = Method::I;
    std::vector<Phase> phases;
    double cooling_duration_s = 0.0;
    double rempd_window_s = 0.0;

    double total_duration() const;
    double rempd_start() const; // turn-on time of REMPD + THz
    const Phase* phase_at(double t) const;
    void validate() const;
};

// Durations and temperatures feeding build_timeline.
struct TimelineConfig {
    double cooling_duration_s = 35.0;       // T_c
    double observation_window_s = 60.0;     // method I spectroscopy phase
    double rempd_window_s = 3.0;            // method II excitation window
    double normalization_window_s = 5.0;    // method II initial secular-on span
    double readout_window_s = 5.0;          // method II final secular-on span
    double liquid_temperature_k = 0.150;    // secular-heated ensemble
    double crystal_temperature_k = 0.012;   // well-crystallized ensemble
};

ProtocolTimeline build_timeline(Method method, const FrequencyList& list,
                                const TimelineConfig& config = {});

// Mapping from molecule number to secular-excitation fluorescence.
struct FluorescenceModel {
    double background_cps = 0.0;
    double gain_cps_per_molecule = 1.0;
    double saturation_molecules = 0.0; // <= 0 disables saturation
    double noise_sigma_cps = 0.0;
    std::uint64_t rng_seed = 0;
    double sample_rate_hz = 50.0;
    bool poisson_noise = false; // photon-shot mode
};

struct TraceSample {
    double time_s;
    double fluorescence_cps;
};

struct DecayTrace {
    std::vector<TraceSample> samples;
    Method method = Method::I;
    std::string list_name;
    int repetition = 0;
    std::uint64_t seed = 0;
};

// Samples the fluorescence map of the trajectory's molecule number over all
// secular-scan-on phases of the timeline, adding seeded noise.
DecayTrace synthesize_trace(const Trajectory& trajectory, const FluorescenceModel& fm,
                            const ProtocolTimeline& timeline);

// Ratio of the fluorescence levels after/before the excitation window;
// approximately the surviving molecule fraction. Levels are background-free.
double method2_signal(double level_before, double level_after, double noise_floor = 0.0);

// Mean background-subtracted fluorescence of the trace within [t0, t1).
double mean_level(const DecayTrace& trace, double t0, double t1, double background_cps);

} // namespace rotsim
