#include "divscale/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "divscale/core.hpp"
#include "divscale/parallel.hpp"
#include "divscale/rng.hpp"

namespace divscale {

void TheoryParams::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho must be in (0, 1)");
    if (!(loss_good < loss_0 && loss_0 <= loss_bad)) {
        throw InvalidArgument("two-point model needs loss_good < loss_0 <= loss_bad");
    }
}

double critical_threshold(const TheoryParams& p) {
    p.validate();
    return std::log((p.loss_bad - p.loss_good) / (p.loss_0 - p.loss_good)) / std::log(1.0 / (1.0 - p.rho));
}

double expected_min_em(const TheoryParams& p, std::size_t n) {
    if (n < 1) throw InvalidArgument("expected_min_em needs n >= 1");
    if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw InvalidArgument("rho must be in [0, 1]");
    const double all_bad = std::pow(1.0 - p.rho, static_cast<double>(n));
    return all_bad * p.loss_bad + (1.0 - all_bad) * p.loss_good;
}

namespace {

constexpr std::size_t kBlock = 8192;

// Number of trials (out of `count`) in which at least one of n draws was good.
std::size_t count_successes(double rho, std::size_t n, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < count; ++t) {
        for (std::size_t k = 0; k < n; ++k) {
            if (rng.uniform() < rho) {
                ++hits;
                break;
            }
        }
    }
    return hits;
}

}  // namespace

McEstimate mc_expected_min(const TheoryParams& p, std::size_t n, std::size_t trials, std::uint64_t seed,
                           std::size_t jobs) {
    if (trials < 1) throw InvalidArgument("mc_expected_min needs trials >= 1");
    if (n < 1) throw InvalidArgument("mc_expected_min needs n >= 1");
    if (!(p.rho >= 0.0 && p.rho <= 1.0)) throw InvalidArgument("rho must be in [0, 1]");

    const std::size_t blocks = (trials + kBlock - 1) / kBlock;
    std::vector<std::size_t> hits(blocks);
    parallel_for(blocks, jobs, [&](std::size_t b) {
        const std::size_t count = std::min(kBlock, trials - b * kBlock);
        hits[b] = count_successes(p.rho, n, count, derive_seed(seed, "mc-block", b));
    });
    std::size_t good = 0;
    for (std::size_t h : hits) good += h;
    const std::size_t bad = trials - good;

    // Losses take two values, so the sample moments follow from the counts.
    const double t = static_cast<double>(trials);
    McEstimate est;
    est.mean = (static_cast<double>(good) * p.loss_good + static_cast<double>(bad) * p.loss_bad) / t;
    if (trials > 1) {
        const double dg = p.loss_good - est.mean;
        const double db = p.loss_bad - est.mean;
        const double var = (static_cast<double>(good) * dg * dg + static_cast<double>(bad) * db * db) / (t - 1.0);
        est.std_err = std::sqrt(var / t);
    }
    if (good == 0 || bad == 0) est.std_err = 0.0;
    return est;
}

std::size_t empirical_crossover(const TheoryParams& p, std::size_t trials, std::uint64_t seed,
                                std::size_t n_limit, std::size_t jobs) {
    p.validate();
    for (std::size_t n = 1; n <= n_limit; ++n) {
        const auto est = mc_expected_min(p, n, trials, derive_seed(seed, "crossover", n), jobs);
        if (est.mean + 3.0 * est.std_err < p.loss_0) return n;
    }
    throw InvalidArgument("no crossover found up to n = " + std::to_string(n_limit));
}

SupportExpansion support_expansion_demo(std::span<const double> std_support, std::span<const double> div_support) {
    if (std_support.empty() || div_support.empty()) throw InvalidArgument("supports must be nonempty");
    for (double s : std_support) {
        if (std::find(div_support.begin(), div_support.end(), s) == div_support.end()) {
            throw AssumptionError("standard support point " + std::to_string(s) +
                                  " is missing from the diversified support");
        }
    }
    SupportExpansion out;
    out.lim_std = *std::min_element(std_support.begin(), std_support.end());
    out.lim_div = *std::min_element(div_support.begin(), div_support.end());
    out.strict = out.lim_div < out.lim_std;
    return out;
}

double mc_support_minimum(std::span<const double> support, std::size_t n, std::uint64_t seed) {
    if (support.empty()) throw InvalidArgument("support must be nonempty");
    if (n < 1) throw InvalidArgument("n must be >= 1");
    Rng rng(seed);
    const auto last = static_cast<std::int64_t>(support.size()) - 1;
    double best = support[static_cast<std::size_t>(rng.uniform_int(0, last))];
    for (std::size_t k = 1; k < n; ++k) best = std::min(best, support[static_cast<std::size_t>(rng.uniform_int(0, last))]);
    return best;
}

}  // namespace divscale
