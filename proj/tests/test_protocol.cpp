#include <doctest.h>

#include <cmath>

#include "rotsim/errors.hpp"
#include "rotsim/protocol.hpp"

using namespace rotsim;

namespace {

FrequencyList list_a() {
    FrequencyList l;
    l.name = "A";
    l.entries_hz = {-33.211e6, -6.539e6, -9.069e6, -2.138e6};
    l.total_duration_s = l.pass_duration();
    return l;
}

Trajectory flat_trajectory(double molecules, double t_end) {
    Trajectory traj;
    for (double t = 0.0; t <= t_end + 1e-9; t += 0.5) {
        PopulationState s = make_empty_state(7);
        s.time = t;
        s.ground_hf[0] = molecules;
        traj.push_back(s);
    }
    return traj;
}

} // namespace

TEST_CASE("method I timeline keeps the secular scan on and switches REMPD at T_c") {
    const ProtocolTimeline tl = build_timeline(Method::I, list_a(), {});
    REQUIRE(tl.phases.size() == 2);
    CHECK(tl.rempd_start() == doctest::Approx(35.0));
    CHECK(tl.total_duration() == doctest::Approx(95.0));

    for (const Phase& p : tl.phases) CHECK(p.flags.secular_scan);
    const Phase& cooling = tl.phases[0];
    CHECK(cooling.flags.cooling_2p7);
    CHECK(cooling.flags.cooling_5p5);
    CHECK(!cooling.flags.rempd);
    CHECK(!cooling.flags.thz);

    const Phase& spec = tl.phases[1];
    CHECK(spec.flags.rempd);
    CHECK(spec.flags.thz);
    CHECK(spec.flags.cooling_5p5);   // the 5.5 um pump stays on
    CHECK(!spec.flags.cooling_2p7);  // the 2.7 um pump is blocked
    REQUIRE(spec.thz_list.has_value());
    CHECK(spec.thz_list->name == "A");
}

TEST_CASE("method II timeline: 3 s excitation with the secular scan off") {
    const ProtocolTimeline tl = build_timeline(Method::II, list_a(), {});
    REQUIRE(tl.phases.size() == 4);
    CHECK(tl.rempd_window_s == doctest::Approx(3.0));

    const Phase& norm = tl.phases[0];
    const Phase& cooling = tl.phases[1];
    const Phase& excitation = tl.phases[2];
    const Phase& readout = tl.phases[3];

    CHECK(norm.flags.secular_scan);
    CHECK(!cooling.flags.secular_scan);
    CHECK(!excitation.flags.secular_scan);
    CHECK(readout.flags.secular_scan);

    CHECK(excitation.duration_s == doctest::Approx(3.0));
    CHECK(excitation.flags.rempd);
    CHECK(excitation.flags.thz);
    CHECK(!excitation.flags.cooling_2p7);
    CHECK(!excitation.flags.cooling_5p5);

    // total cooling time spans normalization + dark cooling
    CHECK(norm.duration_s + cooling.duration_s == doctest::Approx(35.0));
    CHECK(excitation.start_s == doctest::Approx(35.0));
    CHECK(excitation.ion_temperature_k == doctest::Approx(0.012));
}

TEST_CASE("timing is independent of the list content") {
    FrequencyList detuned;
    detuned.name = "detuned500";
    detuned.entries_hz = {500e6};
    const ProtocolTimeline t1 = build_timeline(Method::I, list_a(), {});
    const ProtocolTimeline t2 = build_timeline(Method::I, detuned, {});
    REQUIRE(t1.phases.size() == t2.phases.size());
    for (std::size_t i = 0; i < t1.phases.size(); ++i) {
        CHECK(t1.phases[i].start_s == t2.phases[i].start_s);
        CHECK(t1.phases[i].duration_s == t2.phases[i].duration_s);
    }
    CHECK(t2.phases[1].thz_list->entries_hz[0] == doctest::Approx(500e6));
}

TEST_CASE("schedule audit: no flag is active outside its declared phase") {
    for (Method m : {Method::I, Method::II}) {
        const ProtocolTimeline tl = build_timeline(m, list_a(), {});
        for (double t = 0.0; t < tl.total_duration(); t += 0.01) {
            const Phase* p = tl.phase_at(t);
            REQUIRE(p != nullptr);
            // the pointer really designates the enclosing phase
            CHECK(t >= p->start_s);
            CHECK(t < p->end_s());
            // REMPD and THz are only ever on together
            CHECK(p->flags.rempd == p->flags.thz);
        }
        CHECK(tl.phase_at(tl.total_duration() + 0.1) == nullptr);
    }
}

TEST_CASE("trace synthesis maps molecule number through the fluorescence model") {
    const ProtocolTimeline tl = build_timeline(Method::I, list_a(), {});
    const Trajectory traj = flat_trajectory(300.0, tl.total_duration());

    SUBCASE("identity mapping with unit gain and no noise") {
        FluorescenceModel fm;
        fm.gain_cps_per_molecule = 1.0;
        const DecayTrace trace = synthesize_trace(traj, fm, tl);
        REQUIRE(!trace.samples.empty());
        for (const TraceSample& s : trace.samples)
            CHECK(s.fluorescence_cps == doctest::Approx(300.0).epsilon(1e-12));
        // method I: the secular scan runs the whole cycle, so the trace covers it
        CHECK(trace.samples.front().time_s < 1.0);
        CHECK(trace.samples.back().time_s > 94.0);
    }
    SUBCASE("half saturation") {
        FluorescenceModel fm;
        fm.gain_cps_per_molecule = 1.0;
        fm.saturation_molecules = 300.0;
        const DecayTrace trace = synthesize_trace(traj, fm, tl);
        CHECK(trace.samples.front().fluorescence_cps == doctest::Approx(150.0).epsilon(1e-12));
    }
    SUBCASE("identical seeds give identical traces, different seeds differ") {
        FluorescenceModel fm;
        fm.noise_sigma_cps = 5.0;
        fm.rng_seed = 1234;
        const DecayTrace t1 = synthesize_trace(traj, fm, tl);
        const DecayTrace t2 = synthesize_trace(traj, fm, tl);
        REQUIRE(t1.samples.size() == t2.samples.size());
        for (std::size_t i = 0; i < t1.samples.size(); ++i)
            CHECK(t1.samples[i].fluorescence_cps == t2.samples[i].fluorescence_cps);
        fm.rng_seed = 1235;
        const DecayTrace t3 = synthesize_trace(traj, fm, tl);
        bool any_diff = false;
        for (std::size_t i = 0; i < t1.samples.size(); ++i)
            any_diff = any_diff || t1.samples[i].fluorescence_cps != t3.samples[i].fluorescence_cps;
        CHECK(any_diff);
    }
    SUBCASE("photon-shot mode scales the noise with the level") {
        FluorescenceModel fm;
        fm.gain_cps_per_molecule = 1.0;
        fm.poisson_noise = true;
        fm.rng_seed = 7;
        const DecayTrace trace = synthesize_trace(traj, fm, tl);
        double var = 0.0;
        for (const TraceSample& s : trace.samples) {
            const double r = s.fluorescence_cps - 300.0;
            var += r * r;
        }
        var /= double(trace.samples.size());
        // shot variance at level 300 is 300
        CHECK(var > 200.0);
        CHECK(var < 400.0);
    }
    SUBCASE("trajectory must cover the timeline") {
        const Trajectory shorter = flat_trajectory(300.0, 40.0);
        FluorescenceModel fm;
        CHECK_THROWS_AS(synthesize_trace(shorter, fm, tl), PhysicsError);
    }
    SUBCASE("method II trace has a gap while the secular scan is off") {
        const ProtocolTimeline tl2 = build_timeline(Method::II, list_a(), {});
        const Trajectory traj2 = flat_trajectory(300.0, tl2.total_duration());
        FluorescenceModel fm;
        const DecayTrace trace = synthesize_trace(traj2, fm, tl2);
        for (const TraceSample& s : trace.samples)
            CHECK((s.time_s < 5.0 || s.time_s >= 38.0));
    }
}

TEST_CASE("repetition averaging shrinks the noise like 1/sqrt(n)") {
    const ProtocolTimeline tl = build_timeline(Method::II, list_a(), {});
    const Trajectory traj = flat_trajectory(100.0, tl.total_duration());
    FluorescenceModel fm;
    fm.gain_cps_per_molecule = 1.0;
    fm.noise_sigma_cps = 10.0;

    const int n = 100;
    std::vector<DecayTrace> traces;
    for (int k = 0; k < n; ++k) {
        fm.rng_seed = derive_seed(99, k);
        traces.push_back(synthesize_trace(traj, fm, tl));
    }
    // RMS residual of the mean trace against the clean level
    double rms = 0.0;
    const DecayTrace mean = [&] {
        DecayTrace acc = traces[0];
        for (int k = 1; k < n; ++k)
            for (std::size_t i = 0; i < acc.samples.size(); ++i)
                acc.samples[i].fluorescence_cps += traces[k].samples[i].fluorescence_cps;
        for (auto& s : acc.samples) s.fluorescence_cps /= n;
        return acc;
    }();
    for (const TraceSample& s : mean.samples) {
        const double r = s.fluorescence_cps - 100.0;
        rms += r * r;
    }
    rms = std::sqrt(rms / double(mean.samples.size()));
    // expected standard error 10/sqrt(100) = 1.0
    CHECK(rms > 0.7);
    CHECK(rms < 1.3);
}

TEST_CASE("method II ratio") {
    CHECK(method2_signal(2000.0, 2000.0) == doctest::Approx(1.0));
    CHECK(method2_signal(2000.0, 1400.0) == doctest::Approx(0.7));
    CHECK_THROWS_AS(method2_signal(0.0, 10.0), PhysicsError);
    CHECK_THROWS_AS(method2_signal(5.0, 4.0, 10.0), PhysicsError);
}
