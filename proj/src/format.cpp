#include "clinex/format.hpp"

#include <cmath>
#include <cstdio>

namespace clinex {

double round_half_even(double value, int decimals) {
    if (!std::isfinite(value)) return value;
    const double scale = std::pow(10.0, decimals);
    const double scaled = value * scale;
    const double floor = std::floor(scaled);
    const double frac = scaled - floor;
    double rounded = 0.0;
    if (std::fabs(frac - 0.5) < 1e-9) {
        rounded = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
    } else {
        rounded = std::round(scaled);
    }
    return rounded / scale;
}

std::string format3(std::optional<double> value) {
    if (!value) return {};
    double r = round_half_even(*value, 3);
    if (r == 0.0) r = 0.0;  // no "-0.000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", r);
    return buf;
}

}  // namespace clinex
