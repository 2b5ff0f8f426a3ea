#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "divscale/error.hpp"

namespace divscale {

/// Dense row-major matrix of doubles. Rows are time steps, columns channels,
/// so the flat storage is already in time-major/channel-minor order.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    // Single-channel column from a vector.
    static Matrix column(std::span<const double> values);
    // Nested rows; all rows must have the same width.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> channel(std::size_t c) const;
    void set_channel(std::size_t c, std::span<const double> values);

    // Rows [first, first + count).
    Matrix slice_rows(std::size_t first, std::size_t count) const;
    // Keep the most recent `count` rows.
    Matrix tail_rows(std::size_t count) const;
    // First `count` columns.
    Matrix leading_cols(std::size_t count) const;

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Context series X: L time steps by D channels.
struct TimeSeries {
    Matrix values;
    std::optional<std::string> freq_hint;
    std::string name;
    // Set when missing-data masking wrote NaN sentinels into `values`.
    bool nan_masked = false;

    TimeSeries() = default;
    explicit TimeSeries(Matrix v, std::string series_name = {},
                        std::optional<std::string> freq = std::nullopt,
                        bool allow_nan = false);

    static TimeSeries univariate(std::span<const double> v, std::string series_name = {});

    std::size_t length() const noexcept { return values.rows(); }
    std::size_t channels() const noexcept { return values.cols(); }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

/// Forecast Y-hat: H steps by D_out channels.
struct Forecast {
    Matrix values;

    Forecast() = default;
    explicit Forecast(Matrix v);
    static Forecast univariate(std::span<const double> v);

    std::size_t horizon() const noexcept { return values.rows(); }
    std::size_t channels() const noexcept { return values.cols(); }

    friend bool operator==(const Forecast&, const Forecast&) = default;
};

struct Provenance {
    std::uint64_t candidate_seed = 0;
    std::string perturbation_id = "none";
    double perturbed_input_similarity = 1.0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// N forecasts of one shape plus where each came from.
class CandidatePool {
public:
    CandidatePool() = default;

    void add(Forecast f, Provenance p);
    void append(CandidatePool other);

    std::size_t size() const noexcept { return candidates_.size(); }
    bool empty() const noexcept { return candidates_.empty(); }
    std::size_t horizon() const;
    std::size_t channels() const;

    const std::vector<Forecast>& candidates() const noexcept { return candidates_; }
    const std::vector<Provenance>& provenance() const noexcept { return provenance_; }
    const Forecast& operator[](std::size_t i) const { return candidates_.at(i); }

    friend bool operator==(const CandidatePool&, const CandidatePool&) = default;

private:
    std::vector<Forecast> candidates_;
    std::vector<Provenance> provenance_;
};

/// Hierarchical seed: a master value plus a path of (label, index) steps.
/// `seed()` folds derive_seed along the path, so it is a pure function of
/// the tree's contents.
class SeedTree {
public:
    SeedTree() = default;
    explicit SeedTree(std::uint64_t master) : master_(master) {}

    SeedTree child(std::string label, std::uint64_t index) const;
    std::uint64_t seed() const noexcept;
    std::uint64_t master() const noexcept { return master_; }
    const std::vector<std::pair<std::string, std::uint64_t>>& derivation() const noexcept {
        return path_;
    }

private:
    std::uint64_t master_ = 0;
    std::vector<std::pair<std::string, std::uint64_t>> path_;
};

/// mix64(mix64(base ^ stable_hash(label)) ^ index). For a fixed (base, label)
/// this is injective in `index`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) noexcept;
std::uint64_t derive_seed(const SeedTree& tree, std::string_view label, std::uint64_t index) noexcept;

double mse(const Forecast& pred, const Forecast& truth);
double mae(const Forecast& pred, const Forecast& truth);

struct SimilarityOptions {
    // z-score each channel before comparing.
    bool zscore = false;
};

/// Cosine similarity of the flattened (time-major) values. Entries that are
/// NaN in either operand are skipped. If exactly one side is all zero the
/// result is 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const TimeSeries& a, const TimeSeries& b, SimilarityOptions opts = {});

// Per-channel statistics (NaN entries skipped). Sample std uses n-1 and is 0 for n < 2.
std::vector<double> channel_means(const Matrix& m);
std::vector<double> channel_stds(const Matrix& m);

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);
double l2_norm(std::span<const double> v);

/// Neumaier-compensated running sum; order-stable to ~1 ulp of the total.
class KahanSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace divscale
