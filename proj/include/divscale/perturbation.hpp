#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divscale/core.hpp"

namespace divscale {

class Backend;

enum class PerturbationKind {
    None,
    Prefix,
    Suffix,
    Insertion,
    Gaussian,
    RandomOffset,
    Missing,
    Sensitivity,
    Dependency,
    Reconstruction,
};

// Stable ids: none, prefix, suffix, insertion, gaussian, random, missing,
// sensitivity, dependency, reconstruction.
std::string_view perturbation_id(PerturbationKind kind) noexcept;
PerturbationKind parse_perturbation_kind(std::string_view id);
const std::vector<PerturbationKind>& all_perturbation_kinds();

bool is_structural(PerturbationKind kind) noexcept;
bool is_task_specific(PerturbationKind kind) noexcept;

enum class OffsetMode { Continuous, Discrete };
enum class MissingSentinel { Zero, NaN };

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Range&, const Range&) = default;
};

/// One diversified-sampling strategy plus the distributions its parameters are
/// drawn from. Parameters are re-drawn for every candidate.
struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::None;

    // Structural: padding/insertion length l ~ U{lo..hi}.
    Range pad_length{16, 32};
    // Padding constant on the z-scored scale: c_raw = mean + c * std.
    Range pad_value{-1, 1};
    // Insertion point as a fraction of L, rounded to an index in [1, L-1].
    Range insert_position{0.3, 0.7};

    // Gaussian noise level, or the Algorithm-style intensity for the
    // sensitivity/dependency strategies. Drawn uniformly from the range.
    Range eta{0.1, 0.1};

    // Level shift c ~ U[-scale*sigma, scale*sigma] (Discrete: c = +-scale*sigma).
    double offset_scale = 1.0;
    OffsetMode offset_mode = OffsetMode::Continuous;

    double mask_rate = 0.1;
    MissingSentinel sentinel = MissingSentinel::Zero;

    // Decomposition period; derived from the series' freq_hint when unset.
    std::optional<std::size_t> period;
    std::size_t window = 5;

    // Reconstruction temperatures; one is picked uniformly per candidate.
    std::vector<double> temperatures{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    // Label mixed into the seed derivation; defaults to the perturbation id.
    std::string seed_label;

    // Table defaults for a kind (eta U(0.01, 0.05) for the task-specific kinds,
    // 0.1 for Gaussian, and so on).
    static PerturbationSpec defaults(PerturbationKind kind);

    std::string id() const { return std::string(perturbation_id(kind)); }
    // Short description of the parameterisation, e.g. "gaussian[eta=0.05]".
    std::string label() const;
    void validate() const;

    friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

/// Copy of `spec` with its main intensity knob pinned to `value`:
/// pad length for structural kinds, eta for gaussian/sensitivity/dependency,
/// offset_scale for random, mask_rate for missing, temperature for reconstruction.
PerturbationSpec with_intensity(PerturbationSpec spec, double value);

struct PerturbedInput {
    TimeSeries series;
    // Cosine similarity against the original over the end-aligned overlap.
    double source_similarity = 1.0;
    PerturbationSpec spec;
    std::uint64_t seed = 0;
};

/// Draw one perturbed context X' for `x`. Pure in (x, spec, seed) for every
/// kind except Reconstruction, which is as deterministic as `backend`.
PerturbedInput perturb(const TimeSeries& x, const PerturbationSpec& spec, std::uint64_t seed,
                       const Backend* backend = nullptr);

// ---- individual strategies -------------------------------------------------

// Block of `len` rows, channel d filled with c[d], before / after x.
TimeSeries prefix_pad(const TimeSeries& x, std::size_t len, std::span<const double> c);
TimeSeries prefix_pad(const TimeSeries& x, std::size_t len, double c);
TimeSeries suffix_pad(const TimeSeries& x, std::size_t len, std::span<const double> c);
TimeSeries suffix_pad(const TimeSeries& x, std::size_t len, double c);

// `len` copies of row i (1-based) inserted after row i; 1 <= i <= L-1.
TimeSeries middle_insert(const TimeSeries& x, std::size_t len, std::size_t position);

TimeSeries gaussian_noise(const TimeSeries& x, double eta, std::uint64_t seed);
TimeSeries random_offset(const TimeSeries& x, std::uint64_t seed,
                         OffsetMode mode = OffsetMode::Continuous, double scale = 1.0);
TimeSeries missing_data(const TimeSeries& x, double mask_rate, std::uint64_t seed,
                        MissingSentinel sentinel = MissingSentinel::Zero);

/// Intermediate stages of the structure-driven direction field, kept for
/// inspection and tests.
struct DirectionField {
    std::vector<double> magnitude;  // f_T + f_S + f_R
    std::vector<double> signed_field;  // sign(x + eps) * |f|
    std::vector<double> centered;  // signed_field - mean
};

inline constexpr double kStructureEpsilon = 1e-8;

// f = |grad T| + |S - roll(S, p)| + |R|
DirectionField sensitivity_field(std::span<const double> x, std::size_t period);
// f = grad T + |S| + local_std(R, w)
DirectionField dependency_field(std::span<const double> x, std::size_t period, std::size_t window);

// x + eta * ||x|| / (||f|| + eps) * f
std::vector<double> apply_direction(std::span<const double> x, std::span<const double> field, double eta);

// Per channel. Deterministic given eta.
TimeSeries task_sensitivity(const TimeSeries& x, double eta, std::size_t period);
TimeSeries task_dependency(const TimeSeries& x, double eta, std::size_t period, std::size_t window);

TimeSeries task_reconstruction(const TimeSeries& x, double temperature, const Backend& backend,
                               std::uint64_t seed);

// Similarity of the perturbed series against the original over the most recent
// min(L, L') rows of each.
double aligned_similarity(const TimeSeries& original, const TimeSeries& perturbed);

/// true iff pi.source_similarity >= threshold; threshold must be in (0, 1].
bool fidelity_gate(const PerturbedInput& pi, double threshold);

}  // namespace divscale
