#include "rotsim/protocol.hpp"

#include <cmath>

#include "rotsim/errors.hpp"

namespace rotsim {

std::string method_name(Method m) { return m == Method::I ? "I" : "II"; }

Method parse_method(const std::string& name) {
    if (name == "I" || name == "i" || name == "1") return Method::I;
    if (name == "II" || name == "ii" || name == "2") return Method::II;
    throw ConfigError("unknown method '" + name + "' (expected I or II)");
}

double ProtocolTimeline::total_duration() const {
    return phases.empty() ? 0.0 : phases.back().end_s();
}

double ProtocolTimeline::rempd_start() const {
    for (const Phase& p : phases)
        if (p.flags.rempd) return p.start_s;
    throw PhysicsError("timeline has no REMPD phase");
}

const Phase* ProtocolTimeline::phase_at(double t) const {
    for (const Phase& p : phases)
        if (t >= p.start_s && t < p.end_s()) return &p;
    return nullptr;
}

void ProtocolTimeline::validate() const {
    if (phases.empty()) throw PhysicsError("timeline: no phases");
    double t = 0.0;
    for (const Phase& p : phases) {
        if (std::abs(p.start_s - t) > 1e-9) throw PhysicsError("timeline: phases not contiguous");
        if (!(p.duration_s > 0)) throw PhysicsError("timeline: non-positive phase duration");
        if (p.flags.thz && !p.thz_list) throw PhysicsError("timeline: THz on without a list");
        t = p.end_s();
    }
    bool thz_seen = false, rempd_seen = false;
    for (const Phase& p : phases) {
        if (p.flags.thz != p.flags.rempd)
            throw PhysicsError("timeline: THz and REMPD must switch together");
        thz_seen |= p.flags.thz;
        rempd_seen |= p.flags.rempd;
    }
    if (!thz_seen || !rempd_seen) throw PhysicsError("timeline: no spectroscopy phase");
}

ProtocolTimeline build_timeline(Method method, const FrequencyList& list,
                                const TimelineConfig& config) {
    if (!(config.cooling_duration_s > 0) || !(config.observation_window_s > 0) ||
        !(config.rempd_window_s > 0) || !(config.normalization_window_s > 0) ||
        !(config.readout_window_s > 0))
        throw ConfigError("timeline: durations must be positive");

    ProtocolTimeline tl;
    tl.method = method;
    tl.cooling_duration_s = config.cooling_duration_s;

    auto push = [&tl](const std::string& label, double duration, RadiationFlags flags,
                      std::optional<FrequencyList> lst, double temp) {
        Phase p;
        p.label = label;
        p.start_s = tl.total_duration();
        p.duration_s = duration;
        p.flags = flags;
        p.thz_list = std::move(lst);
        p.ion_temperature_k = temp;
        tl.phases.push_back(std::move(p));
    };

    if (method == Method::I) {
        // Secular scan runs from the start through the whole cycle; the
        // 2.7 um pump is blocked when the spectroscopy phase begins, the
        // 5.5 um pump stays on.
        tl.rempd_window_s = config.observation_window_s;
        push("cooling", config.cooling_duration_s,
             {.cooling_5p5 = true, .cooling_2p7 = true, .rempd = false, .thz = false, .secular_scan = true},
             std::nullopt, config.liquid_temperature_k);
        push("spectroscopy", config.observation_window_s,
             {.cooling_5p5 = true, .cooling_2p7 = false, .rempd = true, .thz = true, .secular_scan = true},
             list, config.liquid_temperature_k);
    } else {
        // Secular scan only for the normalization and readout windows; the
        // ensemble is crystallized while THz + REMPD run for exactly the
        // configured window.
        tl.rempd_window_s = config.rempd_window_s;
        if (!(config.normalization_window_s < config.cooling_duration_s))
            throw ConfigError("timeline: normalization window must fit inside the cooling time");
        push("normalization", config.normalization_window_s,
             {.cooling_5p5 = true, .cooling_2p7 = true, .rempd = false, .thz = false, .secular_scan = true},
             std::nullopt, config.liquid_temperature_k);
        push("cooling", config.cooling_duration_s - config.normalization_window_s,
             {.cooling_5p5 = true, .cooling_2p7 = true, .rempd = false, .thz = false, .secular_scan = false},
             std::nullopt, config.crystal_temperature_k);
        push("excitation", config.rempd_window_s,
             {.cooling_5p5 = false, .cooling_2p7 = false, .rempd = true, .thz = true, .secular_scan = false},
             list, config.crystal_temperature_k);
        push("readout", config.readout_window_s,
             {.cooling_5p5 = false, .cooling_2p7 = false, .rempd = false, .thz = false, .secular_scan = true},
             std::nullopt, config.liquid_temperature_k);
    }
    tl.validate();
    return tl;
}

DecayTrace synthesize_trace(const Trajectory& trajectory, const FluorescenceModel& fm,
                            const ProtocolTimeline& timeline) {
    if (trajectory.empty()) throw PhysicsError("synthesize_trace: empty trajectory");
    if (!(fm.gain_cps_per_molecule > 0)) throw PhysicsError("synthesize_trace: gain must be positive");
    if (fm.noise_sigma_cps < 0) throw PhysicsError("synthesize_trace: negative noise sigma");
    if (trajectory.back().time < timeline.total_duration() - 1e-6)
        throw PhysicsError("synthesize_trace: trajectory does not cover the timeline");

    const CounterRng rng(fm.rng_seed);
    DecayTrace trace;
    trace.method = timeline.method;
    trace.seed = fm.rng_seed;

    // Molecule number by linear interpolation on the recorded grid.
    std::size_t cursor = 0;
    auto molecules_at = [&](double t) {
        while (cursor + 1 < trajectory.size() && trajectory[cursor + 1].time <= t) ++cursor;
        const PopulationState& lo = trajectory[cursor];
        if (cursor + 1 == trajectory.size()) return lo.molecules();
        const PopulationState& hi = trajectory[cursor + 1];
        const double f = (t - lo.time) / (hi.time - lo.time);
        return lo.molecules() + f * (hi.molecules() - lo.molecules());
    };

    const double dt = 1.0 / fm.sample_rate_hz;
    const long nsamples = static_cast<long>(std::floor(timeline.total_duration() * fm.sample_rate_hz));
    std::uint64_t counter = 0;
    for (long i = 0; i < nsamples; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * dt;
        const Phase* ph = timeline.phase_at(t);
        ++counter; // advance one draw per grid slot, sampled or not
        if (!ph || !ph->flags.secular_scan) continue;
        const double m = molecules_at(t);
        double level = fm.gain_cps_per_molecule * m;
        if (fm.saturation_molecules > 0) level /= 1.0 + m / fm.saturation_molecules;
        level += fm.background_cps;
        if (fm.poisson_noise) {
            // shot noise approximated by its Gaussian limit at these count rates
            level += std::sqrt(std::max(level, 0.0)) * rng.gaussian(counter);
        } else if (fm.noise_sigma_cps > 0) {
            level += fm.noise_sigma_cps * rng.gaussian(counter);
        }
        trace.samples.push_back({t, level});
    }
    return trace;
}

double method2_signal(double level_before, double level_after, double noise_floor) {
    if (!(level_before > noise_floor))
        throw PhysicsError("method2_signal: reference level at or below the noise floor");
    return level_after / level_before;
}

double mean_level(const DecayTrace& trace, double t0, double t1, double background_cps) {
    double sum = 0.0;
    long n = 0;
    for (const TraceSample& s : trace.samples) {
        if (s.time_s < t0 || s.time_s >= t1) continue;
        sum += s.fluorescence_cps - background_cps;
        ++n;
    }
    if (n == 0) throw PhysicsError("mean_level: no samples in window");
    return sum / static_cast<double>(n);
}

} // namespace rotsim
