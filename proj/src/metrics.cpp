#include "divscale/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "divscale/csv.hpp"
#include "divscale/parallel.hpp"

namespace divscale {

std::string_view strategy_class_name(StrategyClass c) noexcept {
    return c == StrategyClass::TaskAgnostic ? "task_agnostic" : "task_specific";
}

std::string_view combine_name(ConfigCombine c) noexcept {
    return c == ConfigCombine::MinAcrossConfigs ? "min" : "mean";
}

namespace {

MeanStd summarize(const std::vector<double>& v) {
    KahanSum s;
    for (double x : v) s.add(x);
    MeanStd out;
    out.mean = s.value() / static_cast<double>(v.size());
    out.std = sample_std(v);
    return out;
}

double combine(const std::vector<double>& per_config, ConfigCombine how) {
    if (how == ConfigCombine::MinAcrossConfigs) return *std::min_element(per_config.begin(), per_config.end());
    KahanSum s;
    for (double x : per_config) s.add(x);
    return s.value() / static_cast<double>(per_config.size());
}

}  // namespace

RobustMseReport robust_mse(const Backend& backend, const std::vector<Window>& windows,
                           const std::vector<PerturbationSpec>& valid_perturbations, const RobustMseOptions& opts) {
    if (valid_perturbations.empty()) throw InvalidArgument("robust_mse needs at least one valid perturbation");
    if (windows.empty()) throw InvalidArgument("robust_mse needs at least one window");
    if (opts.budget < 1 || opts.trials < 1) throw InvalidArgument("robust_mse needs N >= 1 and T >= 1");

    RobustMseReport report;
    report.strategy_class = opts.strategy_class;
    report.trials = opts.trials;
    report.budget = opts.budget;
    report.combine = opts.combine;

    const std::size_t configs = valid_perturbations.size();
    for (std::size_t t = 0; t < opts.trials; ++t) {
        std::vector<double> em_cfg(configs), mv_cfg(configs);
        for (std::size_t c = 0; c < configs; ++c) {
            const PerturbationSpec& spec = valid_perturbations[c];
            std::vector<double> em_w(windows.size()), mv_w(windows.size());
            try {
                parallel_for(windows.size(), opts.jobs, [&](std::size_t w) {
                    SamplingPlan plan;
                    plan.mode = SamplingMode::Diversified;
                    plan.perturbation = spec;
                    plan.n_max = opts.budget;
                    plan.horizon = opts.horizon;
                    plan.backend = &backend;
                    plan.decode = opts.decode;
                    plan.normalize = opts.normalize;
                    plan.seeds = opts.seeds.child("trial", t).child("config:" + spec.label(), c).child("window", w);
                    const auto r = evaluate_window(plan, windows[w].context, windows[w].truth, {opts.budget});
                    em_w[w] = r.per_budget.at(opts.budget).em_loss;
                    mv_w[w] = r.per_budget.at(opts.budget).mv_loss;
                });
            } catch (const Error&) {
                rethrow_with_context(std::current_exception(),
                                     "robust_mse trial " + std::to_string(t) + " config " + spec.label() +
                                         " (partial report: " + std::to_string(t) + " trials complete)");
            }
            KahanSum em_sum, mv_sum;
            for (std::size_t w = 0; w < windows.size(); ++w) {
                em_sum.add(em_w[w]);
                mv_sum.add(mv_w[w]);
            }
            em_cfg[c] = em_sum.value() / static_cast<double>(windows.size());
            mv_cfg[c] = mv_sum.value() / static_cast<double>(windows.size());
        }
        report.em_trials.push_back(combine(em_cfg, opts.combine));
        report.mv_trials.push_back(combine(mv_cfg, opts.combine));
    }
    report.em = summarize(report.em_trials);
    report.mv = summarize(report.mv_trials);
    return report;
}

std::string RobustMseReport::to_json() const {
    nlohmann::ordered_json j;
    j["strategy_class"] = std::string(strategy_class_name(strategy_class));
    j["per_aggregator"] = {
        {"em", {{"mean", em.mean}, {"std", em.std}}},
        {"mv", {{"mean", mv.mean}, {"std", mv.std}}},
    };
    j["trials"] = trials;
    j["budget"] = budget;
    j["config_combine"] = std::string(combine_name(combine));
    j["em_trials"] = em_trials;
    j["mv_trials"] = mv_trials;
    return j.dump(2);
}

std::string RobustMseReport::to_csv_rows() const {
    std::string out;
    const std::string cls(strategy_class_name(strategy_class));
    for (const auto& [agg, ms] : {std::pair<const char*, MeanStd>{"em", em}, {"mv", mv}}) {
        out += csv_join({cls, agg, format_double(ms.mean), format_double(ms.std), std::to_string(budget),
                         std::to_string(trials)});
        out += '\n';
    }
    return out;
}

std::vector<FailureVerdict> detect_failures(const std::map<std::string, double>& results_by_perturbation,
                                            double baseline) {
    if (!(baseline > 0.0)) throw InvalidArgument("failure baseline must be > 0");
    std::vector<FailureVerdict> out;
    out.reserve(results_by_perturbation.size());
    for (const auto& [id, perturbed] : results_by_perturbation) {
        out.push_back({id, baseline, perturbed, perturbed > kFailureRatio * baseline});
    }
    return out;
}

std::size_t failure_count(const std::vector<FailureVerdict>& verdicts) {
    return static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const FailureVerdict& v) { return v.failed; }));
}

std::size_t convergence_point(const std::map<std::size_t, double>& losses_by_budget, double rel_tol) {
    if (losses_by_budget.empty()) throw InvalidArgument("convergence_point needs at least one budget");
    if (!(rel_tol >= 0.0)) throw InvalidArgument("rel_tol must be >= 0");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [n, loss] : losses_by_budget) best = std::min(best, loss);
    const double bound = (1.0 + rel_tol) * best;
    for (const auto& [n, loss] : losses_by_budget)
        if (loss <= bound) return n;
    return losses_by_budget.rbegin()->first;
}

std::vector<FidelityRow> fidelity_curve(const Backend& backend, const std::vector<Window>& windows,
                                        const PerturbationSpec& family, const std::vector<double>& intensity_grid,
                                        const FidelityOptions& opts) {
    if (intensity_grid.empty()) throw InvalidArgument("fidelity curve needs a nonempty intensity grid");
    if (windows.empty()) throw InvalidArgument("fidelity curve needs at least one window");
    std::vector<FidelityRow> rows;
    for (std::size_t g = 0; g < intensity_grid.size(); ++g) {
        const PerturbationSpec spec = with_intensity(family, intensity_grid[g]);
        std::vector<double> sim(windows.size()), loss(windows.size());
        parallel_for(windows.size(), opts.jobs, [&](std::size_t w) {
            SamplingPlan plan;
            plan.mode = SamplingMode::Diversified;
            plan.perturbation = spec;
            plan.n_max = opts.budget;
            plan.horizon = opts.horizon;
            plan.backend = &backend;
            plan.decode = opts.decode;
            // Same streams at every intensity so curves differ only by intensity.
            plan.seeds = opts.seeds.child("window", w);
            const auto r = evaluate_window(plan, windows[w].context, windows[w].truth, {opts.budget});
            sim[w] = r.mean_similarity;
            loss[w] = r.per_budget.at(opts.budget).mv_loss;
        });
        KahanSum s, l;
        for (std::size_t w = 0; w < windows.size(); ++w) {
            s.add(sim[w]);
            l.add(loss[w]);
        }
        const auto n = static_cast<double>(windows.size());
        rows.push_back({intensity_grid[g], s.value() / n, l.value() / n});
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const FidelityRow& a, const FidelityRow& b) { return a.mean_similarity > b.mean_similarity; });
    return rows;
}

}  // namespace divscale
