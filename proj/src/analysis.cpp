#include "rotsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rotsim/errors.hpp"

namespace rotsim {

namespace {

// Solve the (possibly damped) normal equations for up to 3 parameters.
bool solve_gauss(double m[3][3], double rhs[3], double out[3], int n) {
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[piv]][col])) piv = r;
        std::swap(perm[col], perm[piv]);
        const double d = m[perm[col]][col];
        if (std::abs(d) < 1e-300) return false;
        for (int r = col + 1; r < n; ++r) {
            const double f = m[perm[r]][col] / d;
            for (int c = col; c < n; ++c) m[perm[r]][c] -= f * m[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double v = rhs[perm[col]];
        for (int c = col + 1; c < n; ++c) v -= m[perm[col]][c] * out[c];
        out[col] = v / m[perm[col]][col];
    }
    return true;
}

double sum_squared_residuals(const std::vector<std::pair<double, double>>& pts, double t_ref,
                             double a, double rate, double c) {
    double ssr = 0.0;
    for (const auto& [t, y] : pts) {
        const double r = y - (a * std::exp(-rate * (t - t_ref)) + c);
        ssr += r * r;
    }
    return ssr;
}

} // namespace

FitResult fit_exponential(const std::vector<std::pair<double, double>>& points, double t_ref,
                          bool with_offset) {
    if (points.size() < 10) throw PhysicsError("fit_exponential: need at least 10 samples");

    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();
    for (const auto& [t, y] : points) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double range = ymax - ymin;
    if (!(range > 1e-12 * std::max(std::abs(ymax), 1.0)))
        throw PhysicsError("fit_exponential: degenerate (constant) data");

    // Log-linear starting point on offset-subtracted data.
    double c = with_offset ? ymin - 0.05 * range : 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& [t, y] : points) {
        const double v = y - c;
        if (v <= 0) continue;
        const double lx = t - t_ref, ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    double rate = 1e-3, a = range;
    if (m >= 2 && (m * sxx - sx * sx) > 0) {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        const double icept = (sy - slope * sx) / m;
        rate = -slope;
        a = std::exp(icept);
    }
    if (!(rate > 0) || !std::isfinite(rate)) rate = 1e-3;
    if (!std::isfinite(a) || a <= 0) a = range;

    const int npar = with_offset ? 3 : 2;
    double lambda = 1e-3;
    double ssr = sum_squared_residuals(points, t_ref, a, rate, c);
    FitResult res;
    res.window_start_s = points.front().first;
    res.window_stop_s = points.back().first;

    int iter = 0;
    for (; iter < 100; ++iter) {
        // Accumulate J^T J and J^T r with parameters (a, rate, c).
        double jtj[3][3] = {{0}}, jtr[3] = {0};
        for (const auto& [t, y] : points) {
            const double tau = t - t_ref;
            const double e = std::exp(-rate * tau);
            const double model = a * e + c;
            const double r = y - model;
            const double j[3] = {e, -a * tau * e, 1.0};
            for (int p = 0; p < npar; ++p) {
                jtr[p] += j[p] * r;
                for (int q = 0; q < npar; ++q) jtj[p][q] += j[p] * j[q];
            }
        }

        bool stepped = false;
        double step[3] = {0, 0, 0};
        for (int attempt = 0; attempt < 30; ++attempt) {
            double damped[3][3], rhs[3];
            for (int p = 0; p < 3; ++p) {
                rhs[p] = jtr[p];
                for (int q = 0; q < 3; ++q) damped[p][q] = jtj[p][q];
                damped[p][p] *= (1.0 + lambda);
            }
            if (!solve_gauss(damped, rhs, step, npar)) {
                lambda *= 10.0;
                continue;
            }
            const double a2 = a + step[0];
            const double rate2 = rate + step[1];
            const double c2 = with_offset ? c + step[2] : 0.0;
            const double ssr2 = sum_squared_residuals(points, t_ref, a2, rate2, c2);
            if (std::isfinite(ssr2) && ssr2 <= ssr) {
                a = a2;
                rate = rate2;
                c = c2;
                ssr = ssr2;
                lambda = std::max(lambda * 0.1, 1e-12);
                stepped = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;

        double rel = 0.0;
        const double scale[3] = {std::abs(a) + 1e-30, std::abs(rate) + 1e-30, std::abs(c) + 1e-30};
        for (int p = 0; p < npar; ++p) rel = std::max(rel, std::abs(step[p]) / scale[p]);
        if (rel < 1e-8) {
            res.converged = true;
            ++iter;
            break;
        }
    }

    res.rate_per_s = rate;
    res.amplitude = a;
    res.offset = c;
    res.iterations = iter;

    // Covariance from the undamped normal equations; noise variance estimated
    // from the residuals.
    {
        double jtj[3][3] = {{0}};
        for (const auto& [t, y] : points) {
            const double tau = t - t_ref;
            const double e = std::exp(-rate * tau);
            const double j[3] = {e, -a * tau * e, 1.0};
            for (int p = 0; p < npar; ++p)
                for (int q = 0; q < npar; ++q) jtj[p][q] += j[p] * j[q];
        }
        const int dof = static_cast<int>(points.size()) - npar;
        if (dof > 0) {
            const double noise_var = ssr / dof;
            // invert by solving for the rate column
            double rhs[3] = {0, 1, 0}, col[3];
            double mcopy[3][3];
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q) mcopy[p][q] = jtj[p][q];
            if (solve_gauss(mcopy, rhs, col, npar))
                res.rate_stddev = std::sqrt(std::max(0.0, noise_var * col[1]));
        }
    }
    return res;
}

FitResult fit_exponential(const DecayTrace& trace, double t0, double t1, bool with_offset) {
    std::vector<std::pair<double, double>> pts;
    for (const TraceSample& s : trace.samples)
        if (s.time_s >= t0 - 1e-12 && s.time_s <= t1 + 1e-12)
            pts.emplace_back(s.time_s, s.fluorescence_cps);
    FitResult res = fit_exponential(pts, t0, with_offset);
    res.window_start_s = t0;
    res.window_stop_s = t1;
    return res;
}

double log_slope_rate(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw PhysicsError("log_slope_rate: need at least 2 samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double t0 = points.front().first;
    for (const auto& [t, y] : points) {
        if (!(y > 0)) throw PhysicsError("log_slope_rate: non-positive molecule number");
        const double x = t - t0, ly = std::log(y);
        sx += x;
        sy += ly;
        sxx += x * x;
        sxy += x * ly;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0)) throw PhysicsError("log_slope_rate: degenerate time grid");
    return -(n * sxy - sx * sy) / denom;
}

SpectrumPoint aggregate(const std::vector<double>& per_rep_signals,
                        std::optional<double> normalization) {
    if (per_rep_signals.empty()) throw PhysicsError("aggregate: no repetitions");
    // Summation over sorted values keeps the result independent of input order.
    std::vector<double> v = per_rep_signals;
    std::sort(v.begin(), v.end());

    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double stddev = v.size() >= 2 ? std::sqrt(var / (n - 1.0)) : 0.0;

    SpectrumPoint pt;
    pt.n_reps = static_cast<int>(v.size());
    if (normalization) {
        if (*normalization == 0) throw PhysicsError("aggregate: zero normalization");
        pt.mean_signal = mean / *normalization;
        pt.stddev = stddev / std::abs(*normalization);
    } else {
        pt.mean_signal = mean;
        pt.stddev = stddev;
    }
    return pt;
}

DecayTrace average_traces(const std::vector<DecayTrace>& traces) {
    if (traces.empty()) throw PhysicsError("average_traces: no traces");
    DecayTrace mean = traces.front();
    for (std::size_t k = 1; k < traces.size(); ++k) {
        const DecayTrace& t = traces[k];
        if (t.samples.size() != mean.samples.size())
            throw PhysicsError("average_traces: time grid mismatch");
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (std::abs(t.samples[i].time_s - mean.samples[i].time_s) > 1e-9)
                throw PhysicsError("average_traces: time grid mismatch");
            mean.samples[i].fluorescence_cps += t.samples[i].fluorescence_cps;
        }
    }
    const double inv = 1.0 / static_cast<double>(traces.size());
    for (TraceSample& s : mean.samples) s.fluorescence_cps *= inv;
    mean.repetition = -1;
    mean.seed = 0;
    return mean;
}

} // namespace rotsim
