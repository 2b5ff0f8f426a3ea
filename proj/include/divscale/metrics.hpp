#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "divscale/backend.hpp"
#include "divscale/dataset.hpp"
#include "divscale/engine.hpp"
#include "divscale/perturbation.hpp"

namespace divscale {

enum class StrategyClass { TaskAgnostic, TaskSpecific };
enum class ConfigCombine { MinAcrossConfigs, MeanAcrossConfigs };

std::string_view strategy_class_name(StrategyClass c) noexcept;
std::string_view combine_name(ConfigCombine c) noexcept;

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

struct RobustMseReport {
    StrategyClass strategy_class = StrategyClass::TaskAgnostic;
    MeanStd em;
    MeanStd mv;
    std::size_t trials = 0;
    std::size_t budget = 0;
    ConfigCombine combine = ConfigCombine::MinAcrossConfigs;
    // Combined per-trial values the mean/std were taken over.
    std::vector<double> em_trials;
    std::vector<double> mv_trials;

    std::string to_json() const;
    // "strategy_class,aggregator,mean,std,N,T" rows (no header), one per aggregator.
    std::string to_csv_rows() const;
};

struct RobustMseOptions {
    std::size_t budget = 64;
    std::size_t trials = 5;
    ConfigCombine combine = ConfigCombine::MinAcrossConfigs;
    StrategyClass strategy_class = StrategyClass::TaskAgnostic;
    DecodeParams decode;
    std::size_t horizon = 96;
    SeedTree seeds;
    bool normalize = false;
    // Worker threads for the window loop; 0 means available parallelism.
    std::size_t jobs = 1;
};

/// Best-achievable EM/MV under the validated perturbations at a fixed budget,
/// averaged over independent trials. Per trial, each configuration's losses
/// are averaged over the windows, then combined across configurations.
RobustMseReport robust_mse(const Backend& backend, const std::vector<Window>& windows,
                           const std::vector<PerturbationSpec>& valid_perturbations, const RobustMseOptions& opts);

struct FailureVerdict {
    std::string perturbation_id;
    double baseline_mse = 0.0;
    double perturbed_mse = 0.0;
    bool failed = false;
};

/// failed iff perturbed > 1.2 * baseline (strict). baseline must be > 0.
std::vector<FailureVerdict> detect_failures(const std::map<std::string, double>& results_by_perturbation,
                                            double baseline);
std::size_t failure_count(const std::vector<FailureVerdict>& verdicts);

inline constexpr double kFailureRatio = 1.2;

/// Smallest budget whose loss is within (1 + rel_tol) of the minimum over all budgets.
std::size_t convergence_point(const std::map<std::size_t, double>& losses_by_budget, double rel_tol = 0.01);

struct FidelityRow {
    double intensity = 0.0;
    double mean_similarity = 1.0;
    double mean_mse = 0.0;
};

struct FidelityOptions {
    std::size_t budget = 128;
    DecodeParams decode;
    std::size_t horizon = 96;
    SeedTree seeds;
    std::size_t jobs = 1;
};

/// Mean input similarity and diversified MV loss per intensity of one
/// perturbation family. Rows come back sorted by descending similarity.
std::vector<FidelityRow> fidelity_curve(const Backend& backend, const std::vector<Window>& windows,
                                        const PerturbationSpec& family, const std::vector<double>& intensity_grid,
                                        const FidelityOptions& opts);

}  // namespace divscale
