#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "divscale/backend.hpp"
#include "divscale/core.hpp"
#include "divscale/engine.hpp"
#include "divscale/metrics.hpp"

namespace divscale {

/// Everything a CLI command needs. JSON keys are the field names below.
/// Unset optionals take per-command defaults.
struct RunConfig {
    // "seasonal-ar", "two-point" or "external:<command line>".
    std::string backend = "seasonal-ar";
    nlohmann::json backend_params = nlohmann::json::object();
    std::size_t backend_procs = 1;

    // CSV path, or "synthetic" / "synthetic:<length>" for a generated series.
    std::string dataset = "synthetic";
    std::string target = "OT";
    // full, etth1, ettm1, electricity, traffic, or "frac:<train>,<val>".
    std::string split = "full";

    std::size_t context_length = 512;
    std::size_t horizon = 96;
    std::size_t stride = 32;
    std::vector<std::size_t> budgets = power_of_two_budgets(7);
    double temperature = 0.7;
    double top_p = 1.0;

    std::optional<std::vector<std::string>> perturbations;
    std::uint64_t seed = 0;
    std::optional<std::size_t> trials;
    std::string out = "out";
    // 0 means available parallelism.
    std::size_t jobs = 0;
    // 0 means every window.
    std::size_t max_windows = 0;
    bool normalize = false;
    bool skip_errors = false;
    std::string pool_mode = "nested";

    // scale-sweep: "temperature", "context_length" or "none".
    std::string sweep_axis = "temperature";
    std::optional<std::vector<double>> sweep_values;

    // perturb-sweep: aggregator whose loss at the largest budget decides failure.
    std::string failure_aggregator = "em";

    // robustmse
    std::size_t robust_n = 64;
    std::string combine = "min";
    std::optional<std::vector<std::string>> valid_perturbations;
    // Reference row: "budget" = standard sampling at robust_n, "single" = one draw.
    std::string baseline_mode = "budget";

    // similarity
    std::string fidelity_family = "gaussian";
    std::optional<std::vector<double>> fidelity_grid;
    std::size_t fidelity_budget = 128;

    // theory
    std::vector<double> theory_rho{0.1, 0.3, 0.5};
    std::vector<double> theory_loss_good{0.5};
    std::vector<double> theory_loss_bad{2.0};
    std::vector<double> theory_loss_0{1.0};
    std::vector<std::size_t> theory_n{1, 2, 4, 8, 16, 32, 64};
    std::size_t theory_trials = 100000;

    // validate-backend: optional transcript file of the exchange.
    std::string transcript;

    void validate() const;
    nlohmann::ordered_json to_json() const;
};

/// Applies the keys of `j` on top of `cfg`. Unknown keys and wrong types
/// raise ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Comma-separated list of integers / reals ("1,2,4" or "1:128" for powers of two).
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

std::unique_ptr<Backend> make_backend(const RunConfig& cfg);
SplitSpec parse_split(const std::string& text);
TimeSeries load_series(const RunConfig& cfg);
PoolMode parse_pool_mode(const std::string& text);
ConfigCombine parse_combine(const std::string& text);

// Smooth seasonal series with a small trend and seeded noise.
TimeSeries synthetic_series(std::size_t length, std::uint64_t seed, std::size_t period = 24);

}  // namespace divscale
