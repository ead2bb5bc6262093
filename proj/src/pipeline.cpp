#include "rotsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "rotsim/errors.hpp"
#include "rotsim/rng.hpp"

namespace rotsim {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t rep_seed(const SimulationConfig& config, Method method,
                       const std::string& list_name, int rep) {
    const std::string stream = method_name(method) + ":" + list_name + ":" + std::to_string(rep);
    return derive_seed(config.master_seed, fnv1a(stream));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    return out;
}

void run_serial_or_parallel(int n_tasks, int workers, const std::function<void(int)>& task) {
    if (workers <= 1 || n_tasks <= 1) {
        for (int i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const int n_threads = std::min(workers, n_tasks);
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace

std::vector<double> ListRun::signals() const {
    std::vector<double> s;
    s.reserve(reps.size());
    for (const RepResult& r : reps) s.push_back(r.signal);
    return s;
}

std::string sanitize_list_name(const std::string& name) {
    if (name == "A'") return "Aprime";
    return name;
}

ListRun run_list(const SimulationConfig& config, const Catalog& catalog, Method method,
                 const std::string& list_name, int reps) {
    if (reps < 1) throw ConfigError("run_list: reps must be >= 1");
    config.validate();

    ListRun run;
    run.method = method;
    run.list_name = normalize_list_name(list_name);
    const FrequencyList& list = catalog.list(run.list_name);
    run.timeline = build_timeline(method, list, timeline_config_from(config));

    // The molecule number is constant until REMPD turns on (the earlier
    // phases only redistribute population), so the integration starts from
    // the prepared post-cooling state at the REMPD turn-on time.
    RateModel model = rate_model_from(config, catalog);
    PopulationState cooled = initial_state_from(config);
    cooled.time = run.timeline.rempd_start();

    run.trajectory = integrate(cooled, model, run.timeline, run.timeline.total_duration(),
                               config.integrator_dt_s, config.record_dt_s);
    // prepend the plateau point so traces can cover the full timeline
    PopulationState at_start = cooled;
    at_start.time = 0.0;
    run.trajectory.insert(run.trajectory.begin(), at_start);

    const double rempd_on = run.timeline.rempd_start();
    if (method == Method::I) {
        run.reference_rate_per_s =
            decay_rate(run.trajectory, rempd_on, rempd_on + config.fit_window_s);
        if (run.timeline.total_duration() >= rempd_on + 30.0)
            run.reference_rate_at_25s = local_decay_rate(run.trajectory, rempd_on + 25.0, 5.0);
    }
    for (int rep = 0; rep < reps; ++rep) {
        const std::uint64_t seed = rep_seed(config, method, run.list_name, rep);
        FluorescenceModel fm = fluorescence_from(config, seed);
        DecayTrace trace = synthesize_trace(run.trajectory, fm, run.timeline);
        trace.list_name = run.list_name;
        trace.repetition = rep;

        RepResult r;
        r.repetition = rep;
        r.seed = seed;
        if (method == Method::I) {
            r.fit = fit_exponential(trace, rempd_on, rempd_on + config.fit_window_s);
            r.signal = r.fit.rate_per_s;
        } else {
            const Phase& norm = run.timeline.phases.front();
            const Phase& readout = run.timeline.phases.back();
            r.level_before = mean_level(trace, norm.start_s, norm.end_s(),
                                        config.fluorescence_background_cps);
            r.level_after = mean_level(trace, readout.start_s, readout.end_s(),
                                       config.fluorescence_background_cps);
            const long n_norm = std::lround(norm.duration_s * config.sample_rate_hz);
            const double floor =
                3.0 * config.fluorescence_noise_sigma_cps / std::sqrt(double(std::max(1L, n_norm)));
            r.ratio = method2_signal(r.level_before, r.level_after, floor);
            r.relative_decrease = 1.0 - r.ratio;
            r.signal = r.relative_decrease;
        }
        run.traces.push_back(std::move(trace));
        run.reps.push_back(r);
    }
    return run;
}

SpectrumRun run_spectrum(const SimulationConfig& config, const Catalog& catalog, Method method,
                         const std::vector<std::string>& list_names, int reps, int workers) {
    if (list_names.empty()) throw ConfigError("run_spectrum: need at least one list");

    std::vector<std::string> names;
    for (const std::string& n : list_names) names.push_back(normalize_list_name(n));

    // Method I is normalized by the detuned500 background rate; simulate it
    // even when not requested as a spectrum point.
    const std::size_t n_requested = names.size();
    bool background_extra = false;
    if (method == Method::I &&
        std::find(names.begin(), names.end(), "detuned500") == names.end()) {
        names.push_back("detuned500");
        background_extra = true;
    }

    std::vector<ListRun> runs(names.size());
    run_serial_or_parallel(static_cast<int>(names.size()), workers, [&](int i) {
        runs[static_cast<std::size_t>(i)] =
            run_list(config, catalog, method, names[static_cast<std::size_t>(i)], reps);
    });

    SpectrumRun result;
    std::optional<double> normalization;
    if (method == Method::I) {
        for (const ListRun& r : runs) {
            if (r.list_name == "detuned500") {
                const SpectrumPoint bg = aggregate(r.signals());
                result.background_rate = bg.mean_signal;
                normalization = bg.mean_signal;
            }
        }
    }
    for (std::size_t i = 0; i < n_requested; ++i) {
        SpectrumPoint pt = aggregate(runs[i].signals(), normalization);
        pt.list_name = runs[i].list_name;
        pt.method = method_name(method);
        result.points.push_back(std::move(pt));
    }
    if (background_extra) runs.pop_back();
    result.runs = std::move(runs);
    return result;
}

namespace {

void write_trace_csv(const DecayTrace& trace, std::ostream& out) {
    out << "time_s,fluorescence,method,list,rep,seed\n";
    for (const TraceSample& s : trace.samples)
        out << fmt(s.time_s) << "," << fmt(s.fluorescence_cps) << "," << method_name(trace.method)
            << "," << trace.list_name << "," << trace.repetition << "," << trace.seed << "\n";
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "time_s,N0,N1,N2plus,dissociated,total\n";
    for (const PopulationState& s : traj)
        out << fmt(s.time) << "," << fmt(s.ground_total()) << "," << fmt(s.n1_total()) << ","
            << fmt(s.coarse_total()) << "," << fmt(s.dissociated) << "," << fmt(s.total()) << "\n";
}

void write_timeline_json(const ProtocolTimeline& tl, std::ostream& out) {
    nlohmann::json j;
    j["method"] = method_name(tl.method);
    j["cooling_duration_s"] = tl.cooling_duration_s;
    j["rempd_window_s"] = tl.rempd_window_s;
    j["phases"] = nlohmann::json::array();
    for (const Phase& p : tl.phases) {
        nlohmann::json ph;
        ph["label"] = p.label;
        ph["start_s"] = p.start_s;
        ph["duration_s"] = p.duration_s;
        ph["flags"] = {{"cooling_5p5", p.flags.cooling_5p5},
                       {"cooling_2p7", p.flags.cooling_2p7},
                       {"rempd", p.flags.rempd},
                       {"thz", p.flags.thz},
                       {"secular_scan", p.flags.secular_scan}};
        if (p.thz_list) ph["list"] = p.thz_list->name;
        ph["ion_temperature_k"] = p.ion_temperature_k;
        j["phases"].push_back(ph);
    }
    out << j.dump(2) << "\n";
}

} // namespace

void write_list_run(const ListRun& run, const SimulationConfig& config,
                    const std::string& out_dir) {
    ensure_dir(out_dir);
    const std::string tag = method_name(run.method) + "_" + sanitize_list_name(run.list_name);
    const std::filesystem::path dir(out_dir);

    {
        auto out = open_out((dir / "config.txt").string());
        dump_config(config, out);
    }

    for (const DecayTrace& trace : run.traces) {
        auto out = open_out((dir / ("trace_" + tag + "_rep" + std::to_string(trace.repetition) +
                                    ".csv")).string());
        write_trace_csv(trace, out);
    }
    {
        auto out = open_out((dir / ("trace_" + tag + "_mean.csv")).string());
        write_trace_csv(average_traces(run.traces), out);
    }
    {
        auto out = open_out((dir / ("trajectory_" + tag + ".csv")).string());
        write_trajectory_csv(run.trajectory, out);
    }
    {
        auto out = open_out((dir / ("timeline_" + tag + ".json")).string());
        write_timeline_json(run.timeline, out);
    }
    {
        const SpectrumPoint pt = aggregate(run.signals());
        nlohmann::json j;
        j["list"] = run.list_name;
        j["method"] = method_name(run.method);
        j["n_reps"] = static_cast<int>(run.reps.size());
        j["mean_signal"] = pt.mean_signal;
        j["stddev"] = pt.stddev;
        if (run.method == Method::I) {
            j["reference_rate_per_s"] = run.reference_rate_per_s;
            if (run.reference_rate_at_25s > 0)
                j["reference_rate_at_25s"] = run.reference_rate_at_25s;
        }
        auto out = open_out((dir / ("summary_" + tag + ".json")).string());
        out << j.dump(2) << "\n";
    }
    if (run.method == Method::I) {
        auto out = open_out((dir / ("fits_" + tag + ".csv")).string());
        out << "rep,seed,rate_per_s,rate_stddev,amplitude,offset,converged,window_start_s,"
               "window_stop_s\n";
        for (const RepResult& r : run.reps)
            out << r.repetition << "," << r.seed << "," << fmt(r.fit.rate_per_s) << ","
                << fmt(r.fit.rate_stddev) << "," << fmt(r.fit.amplitude) << ","
                << fmt(r.fit.offset) << "," << (r.fit.converged ? 1 : 0) << ","
                << fmt(r.fit.window_start_s) << "," << fmt(r.fit.window_stop_s) << "\n";
    } else {
        auto out = open_out((dir / ("levels_" + tag + ".csv")).string());
        out << "rep,seed,level_before,level_after,ratio,relative_decrease\n";
        for (const RepResult& r : run.reps)
            out << r.repetition << "," << r.seed << "," << fmt(r.level_before) << ","
                << fmt(r.level_after) << "," << fmt(r.ratio) << "," << fmt(r.relative_decrease)
                << "\n";
    }
}

void write_spectrum_csv(const std::vector<SpectrumPoint>& points, std::ostream& out) {
    out << "list,method,mean_signal,stddev,n_reps\n";
    for (const SpectrumPoint& p : points)
        out << p.list_name << "," << p.method << "," << fmt(p.mean_signal) << "," << fmt(p.stddev)
            << "," << p.n_reps << "\n";
}

void write_spectrum_outputs(const SpectrumRun& run, const SimulationConfig& config,
                            const std::string& out_dir) {
    ensure_dir(out_dir);
    for (const ListRun& r : run.runs) write_list_run(r, config, out_dir);
    const std::string method = run.runs.empty() ? "" : method_name(run.runs.front().method);
    auto out = open_out((std::filesystem::path(out_dir) / ("spectrum_" + method + ".csv")).string());
    write_spectrum_csv(run.points, out);
    // plot-data file: x index, y, yerr
    auto plot = open_out((std::filesystem::path(out_dir) / ("spectrum_" + method + "_xy.csv")).string());
    plot << "x,list,y,yerr\n";
    for (std::size_t i = 0; i < run.points.size(); ++i)
        plot << i << "," << run.points[i].list_name << "," << fmt(run.points[i].mean_signal) << ","
             << fmt(run.points[i].stddev) << "\n";
}

void write_linecalc(const Catalog& catalog, const std::vector<double>& b_values_gauss,
                    double tolerance_hz, std::ostream& out) {
    out << "lower,upper,pol,weight,targeted,b_gauss,position_mhz,matches\n";
    for (double b : b_values_gauss) {
        MagneticField field{b, 0.0};
        for (const HyperfineLine& line : catalog.lines) {
            const double pos = line_position(line, field);
            std::string matches;
            for (const FrequencyList& fl : catalog.lists) {
                for (std::size_t i = 0; i < fl.entries_hz.size(); ++i) {
                    if (std::abs(pos - fl.entries_hz[i]) <= tolerance_hz) {
                        if (!matches.empty()) matches += " ";
                        matches += fl.name + "[" + std::to_string(i) + "]";
                    }
                }
            }
            auto fsj = [](const HyperfineState& st) {
                return "(" + std::to_string(st.f) + "," + std::to_string(st.s) + "," +
                       std::to_string(st.j) + ")";
            };
            out << fsj(line.lower) << "," << fsj(line.upper) << ","
                << (line.polarization == Polarization::Pi ? "pi" : "sigma") << ","
                << fmt(line.weight) << "," << (line.targeted ? 1 : 0) << "," << fmt(b) << ","
                << fmt(pos / 1.0e6) << "," << matches << "\n";
        }
    }
}

} // namespace rotsim
