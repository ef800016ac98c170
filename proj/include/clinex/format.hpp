#pragma once

#include <optional>
#include <string>

namespace clinex {

/// Rounds to `decimals` places, ties to even. A value within 1e-9 (in units
/// of the last place) of a tie is treated as a tie, so 0.0625 and the double
/// nearest to 0.8745 both round the way a decimal reader expects.
double round_half_even(double value, int decimals);

/// Fixed 3-decimal rendering after half-even rounding ("0.899"). Empty for nullopt.
std::string format3(std::optional<double> value);

}  // namespace clinex
