#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rotsim/errors.hpp"
#include "rotsim/pipeline.hpp"
#include "rotsim/selftest.hpp"

namespace {

rotsim::SimulationConfig load_effective_config(const std::string& path, std::uint64_t* seed,
                                               double* b_field) {
    rotsim::SimulationConfig config =
        path.empty() ? rotsim::default_config() : rotsim::load_config(path);
    if (seed) config.master_seed = *seed;
    if (b_field) config.magnetic_field_gauss = *b_field;
    config.validate();
    return config;
}

std::vector<std::string> split_names(const std::vector<std::string>& args) {
    std::vector<std::string> names;
    for (const std::string& arg : args) {
        std::stringstream ss(arg);
        std::string tok;
        while (std::getline(ss, tok, ','))
            if (!tok.empty()) names.push_back(tok);
    }
    return names;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rate-equation simulator for THz rotational spectroscopy of trapped molecular ions"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> b_field;
    app.add_option("--config", config_path, "configuration file (defaults used when omitted)");
    app.add_option("--seed", seed, "override master_seed");
    app.add_option("--b-field", b_field, "override magnetic_field_gauss");

    // linecalc
    auto* linecalc = app.add_subcommand("linecalc", "line positions at given field strengths");
    std::vector<double> b_values{0.0, 1.0};
    double tolerance_khz = 1.0;
    std::string out_dir;
    linecalc->add_option("--b-values", b_values, "field values in gauss")->delimiter(',');
    linecalc->add_option("--tolerance-khz", tolerance_khz, "list-entry match tolerance");
    linecalc->add_option("--out", out_dir, "also write linecalc.csv into this directory");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run one frequency list and fit the decays");
    std::string method_str = "I";
    std::vector<std::string> list_args;
    int reps = 1;
    int workers = 1;
    std::string sim_out = "out";
    simulate->add_option("--method", method_str, "I or II");
    simulate->add_option("--list", list_args, "frequency list name")->required();
    simulate->add_option("--reps", reps, "number of seeded repetitions");
    simulate->add_option("--out", sim_out, "output directory");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "spectrum points over several lists");
    std::string spec_method = "I";
    std::vector<std::string> spec_lists;
    int spec_reps = 9;
    std::string spec_out = "out";
    spectrum->add_option("--method", spec_method, "I or II");
    spectrum->add_option("--list", spec_lists, "list names (comma separated or repeated)")->required();
    spectrum->add_option("--reps", spec_reps, "repetitions per list");
    spectrum->add_option("--workers", workers, "worker threads over lists");
    spectrum->add_option("--out", spec_out, "output directory");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");

    // dumpconfig
    auto* dumpconfig = app.add_subcommand("dumpconfig", "print the effective configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        const rotsim::SimulationConfig config = load_effective_config(
            config_path, seed ? &*seed : nullptr, b_field ? &*b_field : nullptr);

        if (linecalc->parsed()) {
            const rotsim::Catalog catalog = rotsim::catalog_from(config);
            rotsim::write_linecalc(catalog, b_values, tolerance_khz * 1e3, std::cout);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream out(std::filesystem::path(out_dir) / "linecalc.csv");
                rotsim::write_linecalc(catalog, b_values, tolerance_khz * 1e3, out);
            }
        } else if (simulate->parsed()) {
            const rotsim::Catalog catalog = rotsim::catalog_from(config);
            const rotsim::Method method = rotsim::parse_method(method_str);
            const auto names = split_names(list_args);
            if (names.size() != 1) throw rotsim::ConfigError("simulate expects exactly one --list");
            const rotsim::ListRun run =
                rotsim::run_list(config, catalog, method, names.front(), reps);
            rotsim::write_list_run(run, config, sim_out);
            const rotsim::SpectrumPoint pt = rotsim::aggregate(run.signals());
            std::cout << "list " << run.list_name << " method " << rotsim::method_name(method)
                      << ": signal " << pt.mean_signal << " +- " << pt.stddev << " (" << reps
                      << " reps) -> " << sim_out << "\n";
        } else if (spectrum->parsed()) {
            const rotsim::Catalog catalog = rotsim::catalog_from(config);
            const rotsim::Method method = rotsim::parse_method(spec_method);
            const auto names = split_names(spec_lists);
            const rotsim::SpectrumRun run =
                rotsim::run_spectrum(config, catalog, method, names, spec_reps, workers);
            rotsim::write_spectrum_outputs(run, config, spec_out);
            rotsim::write_spectrum_csv(run.points, std::cout);
        } else if (selftest->parsed()) {
            const bool ok = rotsim::run_acceptance_suite(std::cout);
            return ok ? 0 : 2;
        } else if (dumpconfig->parsed()) {
            rotsim::dump_config(config, std::cout);
        }
    } catch (const rotsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
