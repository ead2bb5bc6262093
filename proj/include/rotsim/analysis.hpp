#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rotsim/protocol.hpp"

namespace rotsim {

struct FitResult {
    double rate_per_s = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double rate_stddev = 0.0;
    double window_start_s = 0.0;
    double window_stop_s = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Nonlinear least squares of a*exp(-rate*(t-t_ref)) + c, Gauss-Newton with
// Levenberg damping. The starting point comes from a log-linear regression on
// offset-subtracted data. Throws PhysicsError on degenerate (constant) input.
FitResult fit_exponential(const std::vector<std::pair<double, double>>& points, double t_ref,
                          bool with_offset = true);

// Convenience overload: fit the trace samples inside [t0, t1].
FitResult fit_exponential(const DecayTrace& trace, double t0, double t1,
                          bool with_offset = true);

// Decay rate from a straight-line fit to log(y): the local log-slope readout.
double log_slope_rate(const std::vector<std::pair<double, double>>& points);

// One spectrum data point: mean and standard deviation of the per-repetition
// signals (of the data, not of the mean), optionally normalized.
struct SpectrumPoint {
    std::string list_name;
    std::string method;
    double mean_signal = 0.0;
    double stddev = 0.0;
    int n_reps = 0;
};

SpectrumPoint aggregate(const std::vector<double>& per_rep_signals,
                        std::optional<double> normalization = std::nullopt);

// Pointwise mean of traces on identical time grids.
DecayTrace average_traces(const std::vector<DecayTrace>& traces);

} // namespace rotsim
