#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace rotsim {

// Shortest decimal form that parses back to exactly the same double. Keeps
// data files human-readable while making save/load an identity.
inline std::string format_double(double v) {
    char buf[40];
    std::string fallback;
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) {
            if (!std::strchr(buf, 'e')) return buf; // plain decimal preferred
            if (fallback.empty()) fallback = buf;
        }
    }
    return fallback.empty() ? buf : fallback;
}

// Shortest decimal d with parse(d)*scale == value exactly, so that values
// stored in scaled units (MHz columns holding Hz internally) survive a
// save/load cycle bit-for-bit. Falls back to the nearest representation when
// the value did not originate from the scaled-unit path.
inline std::string format_scaled(double value, double scale) {
    char buf[40];
    const double q = value / scale;
    std::string fallback;
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, q);
        if (std::strtod(buf, nullptr) * scale == value) {
            if (!std::strchr(buf, 'e')) return buf;
            if (fallback.empty()) fallback = buf;
        }
    }
    return fallback.empty() ? format_double(q) : fallback;
}

} // namespace rotsim
