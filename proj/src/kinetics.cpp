#include "rotsim/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rotsim/analysis.hpp"
#include "rotsim/errors.hpp"
#include "rotsim/protocol.hpp"

namespace rotsim {

namespace {

constexpr std::array<int, 4> kGroundDeg = {1, 3, 3, 5};   // (1,0,0) (0,1,1) (1,1,1) (1,2,2)
constexpr std::array<int, 10> kUpperDeg = {1, 3, 5, 3, 1, 3, 5, 3, 5, 7};
constexpr int kGroundDegTotal = 12;
constexpr int kUpperDegTotal = 36;

// Per-molecule BBR rates along the rotational ladder; index n refers to the
// N=n-1 <-> N=n pair.
struct BbrLadder {
    std::vector<double> absorption; // N-1 -> N
    std::vector<double> down;       // N -> N-1, stimulated + spontaneous

    static BbrLadder build(const RateModel& model) {
        BbrLadder l;
        l.absorption.assign(model.n_max + 1, 0.0);
        l.down.assign(model.n_max + 1, 0.0);
        for (int n = 1; n <= model.n_max; ++n) {
            const double a = model.einstein.a(n);
            const double f = rotational_gap_hz(model.env, n);
            const BbrRates r = bbr_rates(a, f, model.env.temperature_k, 2 * n - 1, 2 * n + 1);
            l.absorption[n] = r.absorption;
            l.down[n] = r.stimulated + r.spontaneous;
        }
        return l;
    }
};

// One catalog line mapped onto state-vector indices, with the field-spread
// quadrature baked into a set of (position, weight) samples.
struct LineCoupling {
    int gi = -1;
    int ui = -1;
    double back_ratio = 0.0; // g_lower / g_upper
    double weight = 1.0;
    std::vector<double> pos_hz;
    std::vector<double> quad_w;
    double pos_lo = 0.0;
    double pos_hi = 0.0;
};

int ground_index(const HyperfineState& st) {
    const auto states = ground_hyperfine_states();
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i].same_fsj(st.f, st.s, st.j)) return static_cast<int>(i);
    return -1;
}

int upper_index(const HyperfineState& st) {
    const auto states = excited_hyperfine_states();
    for (std::size_t i = 0; i < states.size(); ++i)
        if (states[i].same_fsj(st.f, st.s, st.j)) return static_cast<int>(i);
    return -1;
}

struct ThzCoupler {
    double sigma = 0.0;
    double peak = 0.0;
    std::vector<LineCoupling> lines;

    static ThzCoupler build(const RateModel& model) {
        if (!model.catalog) throw PhysicsError("THz drive requested without a catalog");
        ThzCoupler c;
        c.sigma = gaussian_sigma_from_fwhm(doppler_fwhm(model.doppler));
        c.peak = model.thz_peak_rate_per_s;
        for (const HyperfineLine& l : model.catalog->lines) {
            LineCoupling lc;
            lc.gi = ground_index(l.lower);
            lc.ui = upper_index(l.upper);
            if (lc.gi < 0 || lc.ui < 0)
                throw PhysicsError("catalog line does not map onto the modeled hyperfine states");
            lc.back_ratio = static_cast<double>(l.lower.degeneracy()) / l.upper.degeneracy();
            lc.weight = l.weight;
            const MagneticField& b = model.b_field;
            if (b.spread_gauss > 0.0) {
                const GaussHermite16& gh = gauss_hermite_16();
                const double scale = std::sqrt(2.0) * b.spread_gauss;
                const double inv_sqrt_pi = 1.0 / std::sqrt(kPi);
                for (int i = 0; i < 16; ++i) {
                    MagneticField sample{std::abs(b.magnitude_gauss + scale * gh.node[i]), 0.0};
                    lc.pos_hz.push_back(line_position(l, sample));
                    lc.quad_w.push_back(gh.weight[i] * inv_sqrt_pi);
                }
            } else {
                lc.pos_hz.push_back(line_position(l, b));
                lc.quad_w.push_back(1.0);
            }
            lc.pos_lo = *std::min_element(lc.pos_hz.begin(), lc.pos_hz.end());
            lc.pos_hi = *std::max_element(lc.pos_hz.begin(), lc.pos_hz.end());
            c.lines.push_back(std::move(lc));
        }
        return c;
    }

    void apply(const PopulationState& s, double offset_hz, PopulationState& d) const {
        const double cut = 40.0 * sigma;
        for (const LineCoupling& lc : lines) {
            if (offset_hz < lc.pos_lo - cut || offset_hz > lc.pos_hi + cut) continue;
            double shape = 0.0;
            for (std::size_t i = 0; i < lc.pos_hz.size(); ++i) {
                const double u = (offset_hz - lc.pos_hz[i]) / sigma;
                if (std::abs(u) > 38.0) continue;
                shape += lc.quad_w[i] * std::exp(-0.5 * u * u);
            }
            const double k = peak * lc.weight * shape;
            if (k == 0.0) continue;
            const double forward = k * s.ground_hf[lc.gi];
            const double backward = k * lc.back_ratio * s.n1_hf[lc.ui];
            d.ground_hf[lc.gi] += backward - forward;
            d.n1_hf[lc.ui] += forward - backward;
        }
    }
};

void check_state(const PopulationState& s, const RateModel& model) {
    if (s.n_max() != model.n_max)
        throw PhysicsError("population state and rate model disagree on n_max");
}

void axpy(PopulationState& y, const PopulationState& x, double a) {
    for (std::size_t i = 0; i < y.ground_hf.size(); ++i) y.ground_hf[i] += a * x.ground_hf[i];
    for (std::size_t i = 0; i < y.n1_hf.size(); ++i) y.n1_hf[i] += a * x.n1_hf[i];
    for (std::size_t i = 0; i < y.coarse.size(); ++i) y.coarse[i] += a * x.coarse[i];
    y.dissociated += a * x.dissociated;
}

void derivatives_into(const PopulationState& s, const RateModel& model, const BbrLadder& ladder,
                      const ThzCoupler* coupler, std::optional<double> thz_offset,
                      PopulationState& d) {
    d = make_empty_state(model.n_max);

    const double ground_total = s.ground_total();
    const double n1_total = s.n1_total();

    // BBR, N=0 <-> N=1. Rates are hyperfine-blind; arrivals are spread over
    // the destination manifold by degeneracy.
    {
        const double up_flux = ladder.absorption[1] * ground_total;
        const double down_flux = ladder.down[1] * n1_total;
        for (std::size_t g = 0; g < 4; ++g) {
            d.ground_hf[g] += -ladder.absorption[1] * s.ground_hf[g] +
                              down_flux * kGroundDeg[g] / double(kGroundDegTotal);
        }
        for (std::size_t u = 0; u < 10; ++u) {
            d.n1_hf[u] += -ladder.down[1] * s.n1_hf[u] +
                          up_flux * kUpperDeg[u] / double(kUpperDegTotal);
        }
    }

    // BBR, N=1 <-> N=2 and the coarse ladder above.
    if (model.n_max >= 2) {
        const double up_flux = ladder.absorption[2] * n1_total;
        const double down_flux = ladder.down[2] * s.coarse[0];
        for (std::size_t u = 0; u < 10; ++u) {
            d.n1_hf[u] += -ladder.absorption[2] * s.n1_hf[u] +
                          down_flux * kUpperDeg[u] / double(kUpperDegTotal);
        }
        d.coarse[0] += up_flux - down_flux;
        for (int n = 2; n < model.n_max; ++n) {
            const double up = ladder.absorption[n + 1] * s.coarse[n - 2];
            const double dn = ladder.down[n + 1] * s.coarse[n - 1];
            d.coarse[n - 2] += dn - up;
            d.coarse[n - 1] += up - dn;
        }
    }

    // THz rotational excitation.
    if (model.flags.thz && thz_offset && coupler) coupler->apply(s, *thz_offset, d);

    // REMPD drains every N=1 hyperfine state.
    if (model.flags.rempd && model.rempd_rate_per_s > 0.0) {
        for (std::size_t u = 0; u < 10; ++u) {
            const double flux = model.rempd_rate_per_s * s.n1_hf[u];
            d.n1_hf[u] -= flux;
            d.dissociated += flux;
        }
    }

    // Rotational cooling, collapsed to effective pump rates toward N=0.
    if (model.flags.cooling_2p7 && model.pump_n1_rate_per_s > 0.0) {
        for (std::size_t u = 0; u < 10; ++u) {
            const double flux = model.pump_n1_rate_per_s * s.n1_hf[u];
            d.n1_hf[u] -= flux;
            for (std::size_t g = 0; g < 4; ++g)
                d.ground_hf[g] += flux * kGroundDeg[g] / double(kGroundDegTotal);
        }
    }
    if (model.flags.cooling_5p5 && model.pump_n2_rate_per_s > 0.0 && model.n_max >= 2) {
        const double flux = model.pump_n2_rate_per_s * s.coarse[0];
        d.coarse[0] -= flux;
        for (std::size_t g = 0; g < 4; ++g)
            d.ground_hf[g] += flux * kGroundDeg[g] / double(kGroundDegTotal);
    }
}

} // namespace

double PopulationState::ground_total() const {
    return std::accumulate(ground_hf.begin(), ground_hf.end(), 0.0);
}
double PopulationState::n1_total() const {
    return std::accumulate(n1_hf.begin(), n1_hf.end(), 0.0);
}
double PopulationState::coarse_total() const {
    return std::accumulate(coarse.begin(), coarse.end(), 0.0);
}
double PopulationState::molecules() const { return ground_total() + n1_total() + coarse_total(); }
double PopulationState::total() const { return molecules() + dissociated; }

PopulationState make_empty_state(int n_max) {
    if (n_max < 1) throw PhysicsError("n_max must be >= 1");
    PopulationState s;
    s.coarse.assign(std::max(0, n_max - 1), 0.0);
    return s;
}

PopulationState derivatives(const PopulationState& state, const RateModel& model,
                            std::optional<double> thz_offset_hz) {
    check_state(state, model);
    const BbrLadder ladder = BbrLadder::build(model);
    PopulationState d;
    if (model.flags.thz && thz_offset_hz) {
        const ThzCoupler coupler = ThzCoupler::build(model);
        derivatives_into(state, model, ladder, &coupler, thz_offset_hz, d);
    } else {
        derivatives_into(state, model, ladder, nullptr, std::nullopt, d);
    }
    d.time = 1.0; // dt/dt
    return d;
}

Trajectory integrate(const PopulationState& initial, const RateModel& model,
                     const ProtocolTimeline& schedule, double t_end, double dt,
                     double record_dt) {
    check_state(initial, model);
    if (!(dt > 0) || dt > 1.0e-3 + 1.0e-12)
        throw PhysicsError("integrate: dt must be positive and at most 1 ms");
    if (!(t_end > initial.time)) throw PhysicsError("integrate: t_end before initial time");

    const double span = t_end - initial.time;
    const long nsteps = static_cast<long>(std::ceil(span / dt - 1.0e-9));
    const double h = span / static_cast<double>(nsteps);
    const long stride = std::max<long>(1, std::lround(record_dt / h));

    const BbrLadder ladder = BbrLadder::build(model);

    // One THz coupler per distinct phase temperature; built lazily.
    struct PhaseContext {
        RateModel model;
        std::optional<ThzCoupler> coupler;
        const Phase* phase = nullptr;
    };
    PhaseContext ctx;
    ctx.model = model;

    auto select_phase = [&](double t) -> const Phase* { return schedule.phase_at(t); };
    auto refresh = [&](const Phase* ph) {
        ctx.phase = ph;
        if (ph) {
            ctx.model.flags = ph->flags;
            if (ph->ion_temperature_k > 0) ctx.model.doppler.ion_temperature_k = ph->ion_temperature_k;
        } else {
            ctx.model.flags = RadiationFlags{}; // past the schedule: everything off
        }
        if (ctx.model.flags.thz && ph && ph->thz_list)
            ctx.coupler = ThzCoupler::build(ctx.model);
        else
            ctx.coupler.reset();
    };
    refresh(select_phase(initial.time));

    auto eval = [&](const PopulationState& s, double t, PopulationState& d) {
        const Phase* ph = select_phase(t);
        if (ph != ctx.phase) refresh(ph);
        std::optional<double> offset;
        if (ctx.model.flags.thz && ph && ph->thz_list)
            offset = instantaneous_thz_frequency(*ph->thz_list, t - ph->start_s);
        derivatives_into(s, ctx.model, ladder, ctx.coupler ? &*ctx.coupler : nullptr, offset, d);
    };

    Trajectory traj;
    traj.reserve(static_cast<std::size_t>(nsteps / stride) + 2);
    PopulationState y = initial;
    traj.push_back(y);

    PopulationState k1, k2, k3, k4, tmp;
    const double conserved0 = y.total();
    for (long step = 0; step < nsteps; ++step) {
        const double t = initial.time + h * static_cast<double>(step);

        eval(y, t, k1);
        tmp = y;
        axpy(tmp, k1, 0.5 * h);
        eval(tmp, t + 0.5 * h, k2);
        tmp = y;
        axpy(tmp, k2, 0.5 * h);
        eval(tmp, t + 0.5 * h, k3);
        tmp = y;
        axpy(tmp, k3, h);
        eval(tmp, t + h, k4);

        axpy(y, k1, h / 6.0);
        axpy(y, k2, h / 3.0);
        axpy(y, k3, h / 3.0);
        axpy(y, k4, h / 6.0);
        y.time = initial.time + h * static_cast<double>(step + 1);

        const double floor = -1.0e-9 * std::max(1.0, conserved0);
        for (double v : y.ground_hf)
            if (v < floor) throw PhysicsError("integrate: negative population");
        for (double v : y.n1_hf)
            if (v < floor) throw PhysicsError("integrate: negative population");
        for (double v : y.coarse)
            if (v < floor) throw PhysicsError("integrate: negative population");

        if ((step + 1) % stride == 0 || step + 1 == nsteps) traj.push_back(y);
    }
    return traj;
}

PopulationState prepare_cooled_state(double total_molecules, double ground_fraction, int n_max,
                                     ResidueProfile residue, const ThermalEnvironment& env) {
    if (ground_fraction < 0 || ground_fraction > 1)
        throw PhysicsError("prepare_cooled_state: ground fraction outside [0,1]");
    if (total_molecules < 0) throw PhysicsError("prepare_cooled_state: negative molecule count");

    PopulationState s = make_empty_state(n_max);
    const double in_ground = ground_fraction * total_molecules;
    for (std::size_t g = 0; g < 4; ++g)
        s.ground_hf[g] = in_ground * kGroundDeg[g] / double(kGroundDegTotal);

    const double rest = total_molecules - in_ground;
    if (rest > 0 && n_max >= 2) {
        std::vector<double> profile(n_max - 1, 1.0);
        if (residue == ResidueProfile::Thermal) {
            // thermal weights of N=2..n_max; evaluated with a generous ladder
            // so the truncation audit cannot trip for small n_max
            const auto p = thermal_rotational_populations(env, std::max(n_max, 10));
            for (int n = 2; n <= n_max; ++n) profile[n - 2] = p[n];
        }
        double norm = std::accumulate(profile.begin(), profile.end(), 0.0);
        if (!(norm > 0)) {
            // degenerate profile (cold field): spread the residue evenly
            profile.assign(n_max - 1, 1.0);
            norm = static_cast<double>(n_max - 1);
        }
        for (int n = 2; n <= n_max; ++n) s.coarse[n - 2] = rest * profile[n - 2] / norm;
    }
    return s;
}

namespace {

std::vector<std::pair<double, double>> molecule_series(const Trajectory& trajectory,
                                                       double t_start, double t_stop) {
    std::vector<std::pair<double, double>> pts;
    for (const PopulationState& s : trajectory)
        if (s.time >= t_start - 1e-12 && s.time <= t_stop + 1e-12)
            pts.emplace_back(s.time, s.molecules());
    return pts;
}

} // namespace

double decay_rate(const Trajectory& trajectory, double t_start, double t_stop) {
    if (trajectory.empty()) throw PhysicsError("decay_rate: empty trajectory");
    if (t_start < trajectory.front().time - 1e-9 || t_stop > trajectory.back().time + 1e-9)
        throw PhysicsError("decay_rate: window outside trajectory span");
    const auto pts = molecule_series(trajectory, t_start, t_stop);
    const FitResult fit = fit_exponential(pts, t_start);
    return fit.rate_per_s;
}

double local_decay_rate(const Trajectory& trajectory, double t_center, double half_width) {
    const auto pts = molecule_series(trajectory, t_center - half_width, t_center + half_width);
    return log_slope_rate(pts);
}

} // namespace rotsim
