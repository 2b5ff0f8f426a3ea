#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "divscale/backend.hpp"
#include "divscale/core.hpp"
#include "divscale/perturbation.hpp"

namespace divscale {

enum class SamplingMode { Standard, Diversified };

// Nested: one pool of max(budgets), aggregators read prefixes.
// Independent: a fresh pool per budget (for variance studies).
enum class PoolMode { Nested, Independent };

struct DecodeParams {
    double temperature = 0.7;
    double top_p = 1.0;
};

struct SamplingPlan {
    SamplingMode mode = SamplingMode::Standard;
    std::optional<PerturbationSpec> perturbation;  // required iff Diversified
    std::size_t n_max = 1;
    std::size_t horizon = 1;
    const Backend* backend = nullptr;
    DecodeParams decode;
    SeedTree seeds;
    PoolMode pool_mode = PoolMode::Nested;
    // z-score the context with its own statistics and map forecasts back.
    bool normalize = false;

    void validate() const;
};

struct BudgetResult {
    std::size_t budget = 0;
    double em_loss = 0.0;
    std::size_t em_index = 0;
    double em_mae = 0.0;
    double mv_loss = 0.0;
    double mv_mae = 0.0;
    Forecast mv_forecast;
};

struct AggregateResult {
    std::vector<std::size_t> budgets;  // ascending
    std::map<std::size_t, BudgetResult> per_budget;
    // Mean perturbed-input similarity over the largest pool.
    double mean_similarity = 1.0;
};

/// Candidate pool for `context`. Standard: n_max draws under the fixed
/// configuration. Diversified: candidate i forecasts from a fresh X'_i, with
/// perturbation seed derive_seed(plan.seeds, "perturb:" + label, i). In both
/// modes candidate i uses sampling stream candidate_seed(plan.seeds.seed(), i),
/// so Diversified with kind None reproduces Standard bit for bit.
CandidatePool generate_pool(const SamplingPlan& plan, const TimeSeries& context);

struct ExactMatch {
    double loss = 0.0;
    std::size_t index = 0;
};

// Sorted, de-duplicated copy of `budgets`; throws on empty or out of [1, n].
std::vector<std::size_t> normalize_budgets(std::vector<std::size_t> budgets, std::size_t n);

/// Best-of-n by MSE over the first n candidates for every budget n. Ties go
/// to the lowest index.
std::map<std::size_t, ExactMatch> exact_match(const CandidatePool& pool, const Forecast& truth,
                                              std::vector<std::size_t> budgets);

/// Elementwise median over the first n candidates; even n takes the midpoint
/// of the two central order statistics.
std::map<std::size_t, Forecast> majority_vote(const CandidatePool& pool, std::vector<std::size_t> budgets);

AggregateResult evaluate_window(const SamplingPlan& plan, const TimeSeries& context, const Forecast& truth,
                                std::vector<std::size_t> budgets);

// 1, 2, 4, ..., 2^max_exponent
std::vector<std::size_t> power_of_two_budgets(unsigned max_exponent = 7);

}  // namespace divscale
