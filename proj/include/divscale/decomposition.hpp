#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace divscale {

/// Additive split x = trend + seasonal + residual.
struct Decomposition {
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> residual;
    std::size_t period = 0;
};

/// Classical additive moving-average decomposition.
///
/// The trend is the centred moving average of width `period` (the 2 x period
/// average when the period is even), extended at both ends with the nearest
/// defined value. The seasonal profile is the per-phase mean of the detrended
/// series over the region where the trend is defined, shifted to zero mean and
/// tiled to length L. The residual takes up whatever is left, so the three
/// parts add back to `x` exactly up to rounding.
///
/// Requires period >= 2 and x.size() >= 2 * period.
Decomposition stl_decompose(std::span<const double> x, std::size_t period);

// Central differences inside, one-sided at the ends. Needs at least two points.
std::vector<double> gradient(std::span<const double> x);

// out[(i + k) mod L] = x[i]; negative k rolls left.
std::vector<double> roll(std::span<const double> x, long long k);

// Population std over the centred window of odd width w, clipped at the edges.
std::vector<double> local_std(std::span<const double> x, std::size_t window);

// Seasonal period from a frequency hint: hourly -> 24, 15-minute -> 96,
// anything else (or no hint) -> 24.
std::size_t default_period(std::optional<std::string_view> freq_hint);

}  // namespace divscale
