#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace divscale {

/// Two-point loss model: a diversified draw has loss `loss_good` with
/// probability rho and `loss_bad` otherwise; `loss_0` is the one-shot loss of
/// standard sampling.
struct TheoryParams {
    double rho = 0.5;
    double loss_good = 0.0;
    double loss_bad = 1.0;
    double loss_0 = 0.5;

    // rho in (0, 1) and loss_good < loss_0 <= loss_bad.
    void validate() const;
};

/// N* = ln((L_bad - L_good) / (L_0 - L_good)) / ln(1 / (1 - rho)).
/// Diversified sampling beats L_0 in expectation iff N > N*.
double critical_threshold(const TheoryParams& p);

/// E[min of n draws] = (1-rho)^n L_bad + (1 - (1-rho)^n) L_good.
/// Only needs rho in [0, 1] and n >= 1.
double expected_min_em(const TheoryParams& p, std::size_t n);

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Monte Carlo estimate of E[min of n two-point draws]. Trials are simulated
/// in fixed blocks with derived seeds, so the result does not depend on `jobs`.
McEstimate mc_expected_min(const TheoryParams& p, std::size_t n, std::size_t trials, std::uint64_t seed,
                           std::size_t jobs = 1);

/// Smallest n with MC mean + 3 * std_err < L_0. Throws if none is found up
/// to `n_limit`.
std::size_t empirical_crossover(const TheoryParams& p, std::size_t trials, std::uint64_t seed,
                                std::size_t n_limit = 100000, std::size_t jobs = 1);

struct SupportExpansion {
    double lim_std = 0.0;
    double lim_div = 0.0;
    bool strict = false;
};

/// Limits of the best-of-N loss under each support (their infima) and whether
/// diversification strictly lowers it. Requires std_support to be a subset of
/// div_support; throws AssumptionError otherwise.
SupportExpansion support_expansion_demo(std::span<const double> std_support, std::span<const double> div_support);

/// Minimum of n draws taken uniformly from the support points.
double mc_support_minimum(std::span<const double> support, std::size_t n, std::uint64_t seed);

}  // namespace divscale
