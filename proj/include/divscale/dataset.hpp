#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divscale/core.hpp"

namespace divscale {

/// One evaluation window: context X and ground truth Y.
struct Window {
    TimeSeries context;
    Forecast truth;
    std::size_t offset = 0;
};

/// Which rows of the file form the evaluation split.
struct SplitSpec {
    enum class Kind { Full, Counts, Fractions };
    Kind kind = Kind::Full;
    // Counts: train/val/test row counts measured from the start of the file.
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    // Fractions: test is what remains after train_frac + val_frac.
    double train_frac = 0.7;
    double val_frac = 0.1;

    static SplitSpec full() { return {}; }
    static SplitSpec counts(std::size_t train, std::size_t val, std::size_t test);
    static SplitSpec fractions(double train_frac, double val_frac);
    // etth1, ettm1, electricity, traffic (or "full"/"none").
    static SplitSpec preset(std::string_view name);
};

/// Reads the `target` column of a headed CSV and returns the evaluation
/// split as a univariate series. A leading "date" column, if present, is
/// only used to infer freq_hint.
TimeSeries load_dataset(const std::filesystem::path& path, const std::string& target = "OT",
                        const SplitSpec& split = SplitSpec::full());

// "H" for hourly spacing, "15min" for quarter-hourly, "<n>s" otherwise.
std::optional<std::string> infer_freq(std::string_view first, std::string_view second);

/// Windows at offsets 0, stride, 2*stride, ... while offset + L + H <= length.
std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t context_length, std::size_t horizon,
                                    std::size_t stride);

// floor((len - L - H) / stride) + 1 when len >= L + H, else 0.
std::size_t window_count(std::size_t len, std::size_t context_length, std::size_t horizon, std::size_t stride);

}  // namespace divscale
