#include "rotsim/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rotsim/errors.hpp"
#include "rotsim/format.hpp"

namespace rotsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

} // namespace

SimulationConfig default_config() {
    SimulationConfig c;
    c.einstein_a_per_s = default_einstein_set().a_per_s;
    return c;
}

void SimulationConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw ConfigError(std::string("config: ") + name + " must be positive");
    };
    if (!std::isfinite(magnetic_field_gauss) || magnetic_field_gauss < 0)
        throw ConfigError("config: magnetic_field_gauss must be finite and >= 0");
    if (!std::isfinite(magnetic_field_spread_gauss))
        throw ConfigError("config: magnetic_field_spread_gauss must be finite");
    if (magnetic_field_spread_gauss < 0)
        throw ConfigError("config: magnetic_field_spread_gauss must be >= 0");
    positive(ion_temperature_liquid_k, "ion_temperature_liquid_k");
    positive(ion_temperature_crystal_k, "ion_temperature_crystal_k");
    positive(bbr_temperature_k, "bbr_temperature_k");
    positive(ion_mass_u, "ion_mass_u");
    if (molecule_count < 0) throw ConfigError("config: molecule_count must be >= 0");
    if (ground_fraction < 0 || ground_fraction > 1)
        throw ConfigError("config: ground_fraction must lie in [0,1]");
    if (n_max < 2 || n_max > static_cast<int>(einstein_a_per_s.size()))
        throw ConfigError("config: n_max must lie in [2, number of Einstein coefficients]");
    for (double a : einstein_a_per_s)
        if (!(a > 0)) throw ConfigError("config: Einstein coefficients must be positive");
    if (residue_profile != "thermal" && residue_profile != "uniform")
        throw ConfigError("config: residue_profile must be 'thermal' or 'uniform'");
    if (rempd_rate_per_s < 0 || thz_peak_rate_per_s < 0 || pump_n1_rate_per_s < 0 ||
        pump_n2_rate_per_s < 0)
        throw ConfigError("config: rates must be >= 0");
    positive(cooling_duration_s, "cooling_duration_s");
    positive(observation_window_s, "observation_window_s");
    positive(rempd_window_s, "rempd_window_s");
    positive(normalization_window_s, "normalization_window_s");
    positive(readout_window_s, "readout_window_s");
    positive(fit_window_s, "fit_window_s");
    positive(fluorescence_gain_cps_per_molecule, "fluorescence_gain_cps_per_molecule");
    if (fluorescence_noise_sigma_cps < 0)
        throw ConfigError("config: fluorescence_noise_sigma_cps must be >= 0");
    if (fluorescence_saturation_molecules < 0)
        throw ConfigError("config: fluorescence_saturation_molecules must be >= 0");
    positive(sample_rate_hz, "sample_rate_hz");
    positive(integrator_dt_s, "integrator_dt_s");
    if (integrator_dt_s > 1.0e-3 + 1e-12)
        throw ConfigError("config: integrator_dt_s must be at most 1 ms");
    positive(record_dt_s, "record_dt_s");
}

namespace {

using Setter = std::function<void(SimulationConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    auto num = [](double SimulationConfig::* member) {
        return [member](SimulationConfig& c, const std::string& k, const std::string& v) {
            c.*member = to_double(v, k);
        };
    };
    static const std::map<std::string, Setter> table = {
        {"catalog_path",
         [](SimulationConfig& c, const std::string&, const std::string& v) { c.catalog_path = v; }},
        {"magnetic_field_gauss", num(&SimulationConfig::magnetic_field_gauss)},
        {"magnetic_field_spread_gauss", num(&SimulationConfig::magnetic_field_spread_gauss)},
        {"ion_temperature_liquid_k", num(&SimulationConfig::ion_temperature_liquid_k)},
        {"ion_temperature_crystal_k", num(&SimulationConfig::ion_temperature_crystal_k)},
        {"bbr_temperature_k", num(&SimulationConfig::bbr_temperature_k)},
        {"ion_mass_u", num(&SimulationConfig::ion_mass_u)},
        {"molecule_count", num(&SimulationConfig::molecule_count)},
        {"ground_fraction", num(&SimulationConfig::ground_fraction)},
        {"einstein_a_per_s",
         [](SimulationConfig& c, const std::string& k, const std::string& v) {
             c.einstein_a_per_s.clear();
             std::stringstream ss(v);
             std::string tok;
             while (std::getline(ss, tok, ',')) {
                 tok = trim(tok);
                 if (!tok.empty()) c.einstein_a_per_s.push_back(to_double(tok, k));
             }
         }},
        {"n_max",
         [](SimulationConfig& c, const std::string& k, const std::string& v) {
             c.n_max = static_cast<int>(to_double(v, k));
         }},
        {"residue_profile",
         [](SimulationConfig& c, const std::string&, const std::string& v) { c.residue_profile = v; }},
        {"rempd_rate_per_s",
         [](SimulationConfig& c, const std::string& k, const std::string& v) {
             c.rempd_rate_per_s = (v == "saturated") ? kSaturatedRempdRate : to_double(v, k);
         }},
        {"thz_peak_rate_per_s", num(&SimulationConfig::thz_peak_rate_per_s)},
        {"pump_n1_rate_per_s", num(&SimulationConfig::pump_n1_rate_per_s)},
        {"pump_n2_rate_per_s", num(&SimulationConfig::pump_n2_rate_per_s)},
        {"cooling_duration_s", num(&SimulationConfig::cooling_duration_s)},
        {"observation_window_s", num(&SimulationConfig::observation_window_s)},
        {"rempd_window_s", num(&SimulationConfig::rempd_window_s)},
        {"normalization_window_s", num(&SimulationConfig::normalization_window_s)},
        {"readout_window_s", num(&SimulationConfig::readout_window_s)},
        {"fit_window_s", num(&SimulationConfig::fit_window_s)},
        {"fluorescence_background_cps", num(&SimulationConfig::fluorescence_background_cps)},
        {"fluorescence_gain_cps_per_molecule",
         num(&SimulationConfig::fluorescence_gain_cps_per_molecule)},
        {"fluorescence_saturation_molecules",
         num(&SimulationConfig::fluorescence_saturation_molecules)},
        {"fluorescence_noise_sigma_cps", num(&SimulationConfig::fluorescence_noise_sigma_cps)},
        {"fluorescence_poisson_noise",
         [](SimulationConfig& c, const std::string& k, const std::string& v) {
             if (v == "0" || v == "false") c.fluorescence_poisson_noise = false;
             else if (v == "1" || v == "true") c.fluorescence_poisson_noise = true;
             else throw ConfigError("config: " + k + " must be 0/1");
         }},
        {"sample_rate_hz", num(&SimulationConfig::sample_rate_hz)},
        {"master_seed",
         [](SimulationConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.master_seed = std::stoull(v);
             } catch (const std::exception&) {
                 throw ConfigError("config: bad integer for " + k + ": '" + v + "'");
             }
         }},
        {"integrator_dt_s", num(&SimulationConfig::integrator_dt_s)},
        {"record_dt_s", num(&SimulationConfig::record_dt_s)},
        {"trap_drive_mhz", num(&SimulationConfig::trap_drive_mhz)},
        {"secular_scan_low_khz", num(&SimulationConfig::secular_scan_low_khz)},
        {"secular_scan_high_khz", num(&SimulationConfig::secular_scan_high_khz)},
    };
    return table;
}

} // namespace

SimulationConfig parse_config(std::istream& in, const std::string& origin) {
    SimulationConfig c = default_config();
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(c, key, value);
    }
    c.validate();
    return c;
}

SimulationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

void dump_config(const SimulationConfig& config, std::ostream& out) {
    out << "# Simulation configuration; units are part of the key names.\n";
    out << "catalog_path = " << config.catalog_path << "\n\n";

    out << "# Field and ensemble\n";
    out << "magnetic_field_gauss = " << format_double(config.magnetic_field_gauss) << "\n";
    out << "magnetic_field_spread_gauss = " << format_double(config.magnetic_field_spread_gauss) << "\n";
    out << "ion_temperature_liquid_k = " << format_double(config.ion_temperature_liquid_k) << "\n";
    out << "ion_temperature_crystal_k = " << format_double(config.ion_temperature_crystal_k) << "\n";
    out << "bbr_temperature_k = " << format_double(config.bbr_temperature_k) << "\n";
    out << "ion_mass_u = " << format_double(config.ion_mass_u) << "\n";
    out << "molecule_count = " << format_double(config.molecule_count) << "\n";
    out << "ground_fraction = " << format_double(config.ground_fraction) << "\n\n";

    out << "# Rate model. Einstein coefficients are effective values chosen to\n";
    out << "# reproduce the 300 K manifold rates, not ab-initio numbers.\n";
    out << "einstein_a_per_s = ";
    for (std::size_t i = 0; i < config.einstein_a_per_s.size(); ++i) {
        if (i) out << ", ";
        out << format_double(config.einstein_a_per_s[i]);
    }
    out << "\n";
    out << "n_max = " << config.n_max << "\n";
    out << "residue_profile = " << config.residue_profile << "\n";
    out << "rempd_rate_per_s = " << format_double(config.rempd_rate_per_s) << "\n";
    out << "thz_peak_rate_per_s = " << format_double(config.thz_peak_rate_per_s) << "\n";
    out << "pump_n1_rate_per_s = " << format_double(config.pump_n1_rate_per_s) << "\n";
    out << "pump_n2_rate_per_s = " << format_double(config.pump_n2_rate_per_s) << "\n\n";

    out << "# Protocol durations\n";
    out << "cooling_duration_s = " << format_double(config.cooling_duration_s) << "\n";
    out << "observation_window_s = " << format_double(config.observation_window_s) << "\n";
    out << "rempd_window_s = " << format_double(config.rempd_window_s) << "\n";
    out << "normalization_window_s = " << format_double(config.normalization_window_s) << "\n";
    out << "readout_window_s = " << format_double(config.readout_window_s) << "\n";
    out << "fit_window_s = " << format_double(config.fit_window_s) << "\n\n";

    out << "# Fluorescence readout\n";
    out << "fluorescence_background_cps = " << format_double(config.fluorescence_background_cps) << "\n";
    out << "fluorescence_gain_cps_per_molecule = "
        << format_double(config.fluorescence_gain_cps_per_molecule) << "\n";
    out << "fluorescence_saturation_molecules = "
        << format_double(config.fluorescence_saturation_molecules) << "\n";
    out << "fluorescence_noise_sigma_cps = " << format_double(config.fluorescence_noise_sigma_cps) << "\n";
    out << "fluorescence_poisson_noise = " << (config.fluorescence_poisson_noise ? 1 : 0) << "\n";
    out << "sample_rate_hz = " << format_double(config.sample_rate_hz) << "\n\n";

    out << "# Reproducibility and integration\n";
    out << "master_seed = " << config.master_seed << "\n";
    out << "integrator_dt_s = " << format_double(config.integrator_dt_s) << "\n";
    out << "record_dt_s = " << format_double(config.record_dt_s) << "\n\n";

    out << "# Apparatus metadata (recorded, no dynamical role in this model)\n";
    out << "trap_drive_mhz = " << format_double(config.trap_drive_mhz) << "\n";
    out << "secular_scan_low_khz = " << format_double(config.secular_scan_low_khz) << "\n";
    out << "secular_scan_high_khz = " << format_double(config.secular_scan_high_khz) << "\n";
}

std::string dump_config(const SimulationConfig& config) {
    std::ostringstream ss;
    dump_config(config, ss);
    return ss.str();
}

Catalog catalog_from(const SimulationConfig& config) {
    return config.catalog_path.empty() ? builtin_catalog() : load_catalog(config.catalog_path);
}

RateModel rate_model_from(const SimulationConfig& config, const Catalog& catalog) {
    RateModel m;
    m.einstein.a_per_s = config.einstein_a_per_s;
    m.env.temperature_k = config.bbr_temperature_k;
    m.env.rotational_constant_hz = catalog.reference_frequency_hz / 2.0;
    m.catalog = &catalog;
    m.b_field = {config.magnetic_field_gauss, config.magnetic_field_spread_gauss};
    m.doppler.ion_temperature_k = config.ion_temperature_crystal_k;
    m.doppler.ion_mass_kg = config.ion_mass_u * kAtomicMassU;
    m.doppler.transition_frequency_hz = catalog.reference_frequency_hz;
    m.thz_peak_rate_per_s = config.thz_peak_rate_per_s;
    m.rempd_rate_per_s = config.rempd_rate_per_s;
    m.pump_n1_rate_per_s = config.pump_n1_rate_per_s;
    m.pump_n2_rate_per_s = config.pump_n2_rate_per_s;
    m.n_max = config.n_max;
    return m;
}

TimelineConfig timeline_config_from(const SimulationConfig& config) {
    TimelineConfig t;
    t.cooling_duration_s = config.cooling_duration_s;
    t.observation_window_s = config.observation_window_s;
    t.rempd_window_s = config.rempd_window_s;
    t.normalization_window_s = config.normalization_window_s;
    t.readout_window_s = config.readout_window_s;
    t.liquid_temperature_k = config.ion_temperature_liquid_k;
    t.crystal_temperature_k = config.ion_temperature_crystal_k;
    return t;
}

FluorescenceModel fluorescence_from(const SimulationConfig& config, std::uint64_t seed) {
    FluorescenceModel fm;
    fm.background_cps = config.fluorescence_background_cps;
    fm.gain_cps_per_molecule = config.fluorescence_gain_cps_per_molecule;
    fm.saturation_molecules = config.fluorescence_saturation_molecules;
    fm.noise_sigma_cps = config.fluorescence_noise_sigma_cps;
    fm.poisson_noise = config.fluorescence_poisson_noise;
    fm.rng_seed = seed;
    fm.sample_rate_hz = config.sample_rate_hz;
    return fm;
}

PopulationState initial_state_from(const SimulationConfig& config) {
    const ResidueProfile residue =
        config.residue_profile == "uniform" ? ResidueProfile::Uniform : ResidueProfile::Thermal;
    ThermalEnvironment env;
    env.temperature_k = config.bbr_temperature_k;
    return prepare_cooled_state(config.molecule_count, config.ground_fraction, config.n_max,
                                residue, env);
}

} // namespace rotsim
