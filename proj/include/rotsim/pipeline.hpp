#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rotsim/analysis.hpp"
#include "rotsim/config.hpp"

namespace rotsim {

// One repetition of a measurement cycle. Method I fills the fit, method II
// the level pair.
struct RepResult {
    int repetition = 0;
    std::uint64_t seed = 0;
    FitResult fit;                  // method I
    double level_before = 0.0;      // method II, background-subtracted
    double level_after = 0.0;
    double ratio = 0.0;
    double relative_decrease = 0.0;
    double signal = 0.0;            // decay rate (I) or relative decrease (II)
};

struct ListRun {
    Method method = Method::I;
    std::string list_name;
    ProtocolTimeline timeline;
    Trajectory trajectory;          // shared by all repetitions
    std::vector<DecayTrace> traces; // one per repetition
    std::vector<RepResult> reps;

    // noise-free reference rates from the trajectory (method I runs):
    // exponential fit over the fit window after turn-on, and the local
    // log-slope around 25 s when the observation window reaches that far
    double reference_rate_per_s = 0.0;
    double reference_rate_at_25s = 0.0; // 0 when not available

    std::vector<double> signals() const;
};

// Simulate one frequency list: one deterministic trajectory, `reps` seeded
// fluorescence realizations, and the per-repetition signal extraction.
ListRun run_list(const SimulationConfig& config, const Catalog& catalog, Method method,
                 const std::string& list_name, int reps);

// Full spectrum over several lists; method I points are normalized by the
// mean background rate measured with the detuned500 list (simulated on the
// side when not requested). Tasks are distributed over `workers` threads and
// merged in input order.
struct SpectrumRun {
    std::vector<ListRun> runs;           // in input order
    std::vector<SpectrumPoint> points;   // one per requested list
    double background_rate = 0.0;        // method I: mean detuned500 rate
};
SpectrumRun run_spectrum(const SimulationConfig& config, const Catalog& catalog, Method method,
                         const std::vector<std::string>& list_names, int reps, int workers = 1);

// Output writers. All files are plain CSV/JSON text with deterministic
// formatting; identical configuration and master seed give identical bytes.
void write_list_run(const ListRun& run, const SimulationConfig& config,
                    const std::string& out_dir);
void write_spectrum_csv(const std::vector<SpectrumPoint>& points, std::ostream& out);
void write_spectrum_outputs(const SpectrumRun& run, const SimulationConfig& config,
                            const std::string& out_dir);

// Line-position table: every catalog line at every requested field value,
// flagging lines that fall within tolerance of a frequency-list entry.
void write_linecalc(const Catalog& catalog, const std::vector<double>& b_values_gauss,
                    double tolerance_hz, std::ostream& out);

std::string sanitize_list_name(const std::string& name);

} // namespace rotsim
