#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rotsim/kinetics.hpp"
#include "rotsim/protocol.hpp"

namespace rotsim {

// Effective dissociation rate treated as "saturated": large against every
// repopulation rate in the model while keeping lambda*dt well inside the RK4
// stability region at the 1 ms default step.
inline constexpr double kSaturatedRempdRate = 500.0;

// Full parameter set of one simulation run. All quantities carry their unit
// in the key name; unset keys fall back to the documented defaults.
struct SimulationConfig {
    std::string catalog_path; // empty -> bundled data

    double magnetic_field_gauss = 1.0;
    double magnetic_field_spread_gauss = 0.10;
    double ion_temperature_liquid_k = 0.150;
    double ion_temperature_crystal_k = 0.012;
    double bbr_temperature_k = 300.0;
    double ion_mass_u = kHdPlusMassU;

    double molecule_count = 300.0;
    double ground_fraction = 0.70;
    std::vector<double> einstein_a_per_s; // N=1..7, defaults from radfield
    int n_max = 7;
    std::string residue_profile = "thermal"; // or "uniform"

    double rempd_rate_per_s = 0.25;     // apparatus value; "saturated" -> 500
    double thz_peak_rate_per_s = 1.0;
    double pump_n1_rate_per_s = 0.20;   // 2.7 um
    double pump_n2_rate_per_s = 0.45;   // 5.5 um

    double cooling_duration_s = 35.0;
    double observation_window_s = 60.0;
    double rempd_window_s = 3.0;
    double normalization_window_s = 5.0;
    double readout_window_s = 5.0;
    double fit_window_s = 10.0;

    double fluorescence_background_cps = 200.0;
    double fluorescence_gain_cps_per_molecule = 10.0;
    double fluorescence_saturation_molecules = 0.0; // 0 disables
    double fluorescence_noise_sigma_cps = 100.0;
    bool fluorescence_poisson_noise = false; // photon-shot mode
    double sample_rate_hz = 50.0;

    std::uint64_t master_seed = 42;
    double integrator_dt_s = 1.0e-3;
    double record_dt_s = 0.02;

    // Apparatus metadata without a dynamical role in this model.
    double trap_drive_mhz = 14.2;
    double secular_scan_low_khz = 740.0;
    double secular_scan_high_khz = 900.0;

    void validate() const;
};

SimulationConfig default_config();

SimulationConfig load_config(const std::string& path);
SimulationConfig parse_config(std::istream& in, const std::string& origin);
void dump_config(const SimulationConfig& config, std::ostream& out);
std::string dump_config(const SimulationConfig& config);

// Assemble the module inputs from one config.
Catalog catalog_from(const SimulationConfig& config);
RateModel rate_model_from(const SimulationConfig& config, const Catalog& catalog);
TimelineConfig timeline_config_from(const SimulationConfig& config);
FluorescenceModel fluorescence_from(const SimulationConfig& config, std::uint64_t seed);
PopulationState initial_state_from(const SimulationConfig& config);

} // namespace rotsim
