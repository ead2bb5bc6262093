#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rotsim/levelcat.hpp"
#include "rotsim/lineshape.hpp"
#include "rotsim/radfield.hpp"

namespace rotsim {

struct ProtocolTimeline; // protocol.hpp

// Populations over the modeled levels. ground_hf follows the order of
// ground_hyperfine_states(), n1_hf the order of excited_hyperfine_states(),
// coarse holds the N=2..n_max manifolds. Dissociated molecules accumulate in
// their own pool so that the grand total is conserved.
struct PopulationState {
    std::array<double, 4> ground_hf{};
    std::array<double, 10> n1_hf{};
    std::vector<double> coarse; // N=2..n_max
    double dissociated = 0.0;
    double time = 0.0;

    int n_max() const { return static_cast<int>(coarse.size()) + 1; }
    double ground_total() const;
    double n1_total() const;
    double coarse_total() const;
    double molecules() const; // undissociated
    double total() const;     // including dissociated
};

PopulationState make_empty_state(int n_max);

struct RadiationFlags {
    bool cooling_5p5 = false;
    bool cooling_2p7 = false;
    bool rempd = false;
    bool thz = false;
    bool secular_scan = false;
};

// All couplings of the rate-equation system. The catalog pointer is
// non-owning; the catalog must outlive the model.
struct RateModel {
    EinsteinSet einstein = default_einstein_set();
    ThermalEnvironment env;                // BBR temperature, rotational constant
    const Catalog* catalog = nullptr;      // required when THz is on
    MagneticField b_field;
    DopplerParams doppler;                 // ion temperature of the current phase
    double thz_peak_rate_per_s = 0.0;      // on-resonance pumping rate
    double rempd_rate_per_s = 0.0;         // effective dissociation rate out of N=1
    double pump_n1_rate_per_s = 0.0;       // 2.7 um rotational cooling
    double pump_n2_rate_per_s = 0.0;       // 5.5 um rotational cooling
    RadiationFlags flags;
    int n_max = 7;
};

// Time derivative of the populations. thz_offset_hz is the instantaneous THz
// offset from the reference frequency, or nullopt when the source is off.
PopulationState derivatives(const PopulationState& state, const RateModel& model,
                            std::optional<double> thz_offset_hz);

using Trajectory = std::vector<PopulationState>;

// Fixed-step RK4 over the timeline: radiation flags, ion temperature and the
// instantaneous THz frequency are taken from the schedule at every substage.
// States are recorded on a record_dt grid (plus the final state).
Trajectory integrate(const PopulationState& initial, const RateModel& model,
                     const ProtocolTimeline& schedule, double t_end, double dt,
                     double record_dt = 0.02);

// Post-cooling sample: ground_fraction of the molecules in (v=0,N=0) split by
// degeneracy, N=1 empty, the remainder on N>=2 following the residue profile.
enum class ResidueProfile { Thermal, Uniform };
PopulationState prepare_cooled_state(double total_molecules, double ground_fraction,
                                     int n_max = 7,
                                     ResidueProfile residue = ResidueProfile::Thermal,
                                     const ThermalEnvironment& env = {});

// Exponential decay rate of the undissociated molecule number over a time
// window (seconds, absolute trajectory time). Delegates to the analysis
// fitter.
double decay_rate(const Trajectory& trajectory, double t_start, double t_stop);

// Local log-slope of the molecule number around t_center (for rate-at-25 s
// style readouts).
double local_decay_rate(const Trajectory& trajectory, double t_center, double half_width);

} // namespace rotsim
