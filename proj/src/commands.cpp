#include "divscale/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "divscale/csv.hpp"
#include "divscale/dataset.hpp"
#include "divscale/engine.hpp"
#include "divscale/external_backend.hpp"
#include "divscale/log.hpp"
#include "divscale/metrics.hpp"
#include "divscale/parallel.hpp"
#include "divscale/protocol.hpp"
#include "divscale/theory.hpp"

#ifndef DIVSCALE_VERSION
#define DIVSCALE_VERSION "0.0.0"
#endif

namespace divscale {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const DatasetError*>(&e)) return 3;
    if (dynamic_cast<const BackendError*>(&e) || dynamic_cast<const CapabilityError*>(&e)) return 2;
    return 1;
}

std::vector<double> temperature_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 12; ++i) out.push_back(i / 10.0);
    return out;
}

std::vector<std::size_t> context_length_grid() { return {32, 64, 128, 256, 512, 1024}; }

std::vector<double> default_intensity_grid(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::None:
            return {0.0};
        case PerturbationKind::Prefix:
        case PerturbationKind::Suffix:
        case PerturbationKind::Insertion:
            return {0, 8, 16, 32, 64, 128};
        case PerturbationKind::Gaussian:
        case PerturbationKind::Sensitivity:
        case PerturbationKind::Dependency:
            return {0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
        case PerturbationKind::RandomOffset:
            return {0, 0.1, 0.25, 0.5, 1, 2};
        case PerturbationKind::Missing:
            return {0, 0.05, 0.1, 0.2, 0.3, 0.5};
        case PerturbationKind::Reconstruction:
            return {0, 0.3, 0.6, 0.9, 1.2};
    }
    return {0.0};
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::vector<Window> make_windows(const TimeSeries& series, const RunConfig& cfg, std::size_t context_length) {
    std::vector<Window> windows;
    try {
        windows = sliding_windows(series, context_length, cfg.horizon, cfg.stride);
    } catch (const InsufficientLength& e) {
        throw DatasetError(e.what());
    }
    if (cfg.max_windows > 0 && windows.size() > cfg.max_windows) windows.resize(cfg.max_windows);
    return windows;
}

std::vector<PerturbationSpec> specs_for(const std::vector<std::string>& ids, const Backend& backend) {
    std::vector<PerturbationSpec> out;
    for (const auto& id : ids) {
        PerturbationKind kind;
        try {
            kind = parse_perturbation_kind(id);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        if (kind == PerturbationKind::Reconstruction && !backend.descriptor().supports_reconstruction) {
            log::warn("backend '" + backend.descriptor().name + "' cannot reconstruct; dropping reconstruction");
            continue;
        }
        if (std::any_of(out.begin(), out.end(), [&](const auto& s) { return s.kind == kind; })) continue;
        out.push_back(PerturbationSpec::defaults(kind));
    }
    return out;
}

std::vector<std::string> all_perturbation_ids() {
    std::vector<std::string> ids;
    for (auto k : all_perturbation_kinds()) ids.emplace_back(perturbation_id(k));
    return ids;
}

// ---- sweep grid ---------------------------------------------------------

struct SweepPoint {
    std::string perturbation_id = "none";
    std::optional<PerturbationSpec> spec;  // unset: standard sampling
    std::size_t context_length = 0;
    double temperature = 0.0;
    double axis_value = 0.0;

    std::string describe() const {
        return "perturbation=" + perturbation_id + " L=" + std::to_string(context_length) +
               " temperature=" + format_double(temperature);
    }
};

enum class CellStatus { Ok, Skipped, Failed };

struct Cell {
    CellStatus status = CellStatus::Ok;
    std::string message;
    AggregateResult result;
};

struct SweepRun {
    std::string model;
    std::string dataset;
    std::vector<std::size_t> budgets;
    std::size_t trials = 1;
    std::vector<SweepPoint> points;
    std::vector<std::size_t> windows;  // per point
    std::vector<std::size_t> first_cell;  // per point
    std::vector<Cell> cells;  // point-major, then trial, then window

    const Cell& cell(std::size_t p, std::size_t t, std::size_t w) const {
        return cells[first_cell[p] + t * windows[p] + w];
    }
};

SweepRun run_sweep(const RunConfig& cfg, const Backend& backend, const TimeSeries& series,
                   std::vector<SweepPoint> points, std::size_t trials) {
    SweepRun run;
    run.model = backend.descriptor().name;
    run.dataset = series.name;
    run.budgets = normalize_budgets(cfg.budgets, *std::max_element(cfg.budgets.begin(), cfg.budgets.end()));
    run.trials = trials;
    run.points = std::move(points);

    std::map<std::size_t, std::vector<Window>> windows_by_length;
    std::size_t total = 0;
    for (const auto& p : run.points) {
        if (!windows_by_length.contains(p.context_length)) {
            windows_by_length.emplace(p.context_length, make_windows(series, cfg, p.context_length));
        }
        run.first_cell.push_back(total);
        run.windows.push_back(windows_by_length.at(p.context_length).size());
        total += trials * run.windows.back();
    }
    run.cells.resize(total);

    const PoolMode pool_mode = parse_pool_mode(cfg.pool_mode);
    const SeedTree root(cfg.seed);
    log::info("evaluating " + std::to_string(total) + " (configuration, trial, window) cells");

    parallel_for(total, cfg.jobs, [&](std::size_t i) {
        const auto it = std::upper_bound(run.first_cell.begin(), run.first_cell.end(), i);
        const std::size_t p = static_cast<std::size_t>(it - run.first_cell.begin()) - 1;
        const std::size_t local = i - run.first_cell[p];
        const std::size_t t = local / run.windows[p];
        const std::size_t w = local % run.windows[p];
        const SweepPoint& point = run.points[p];
        const Window& win = windows_by_length.at(point.context_length)[w];

        SamplingPlan plan;
        plan.mode = point.spec ? SamplingMode::Diversified : SamplingMode::Standard;
        plan.perturbation = point.spec;
        plan.n_max = run.budgets.back();
        plan.horizon = cfg.horizon;
        plan.backend = &backend;
        plan.decode = DecodeParams{point.temperature, cfg.top_p};
        plan.seeds = root.child("trial", t).child("window", w);
        plan.pool_mode = pool_mode;
        plan.normalize = cfg.normalize;

        Cell& cell = run.cells[i];
        try {
            cell.result = evaluate_window(plan, win.context, win.truth, run.budgets);
        } catch (const InsufficientLength& e) {
            // e.g. a decomposition period longer than half the context
            cell.status = CellStatus::Skipped;
            cell.message = e.what();
        } catch (const Error& e) {
            if (!cfg.skip_errors) {
                rethrow_with_context(std::current_exception(),
                                     point.describe() + " trial=" + std::to_string(t) + " window=" + std::to_string(w));
            }
            cell.status = CellStatus::Failed;
            cell.message = e.what();
        }
    });

    std::size_t skipped = 0, failed = 0;
    for (const auto& c : run.cells) {
        skipped += c.status == CellStatus::Skipped;
        failed += c.status == CellStatus::Failed;
    }
    if (skipped) log::warn(std::to_string(skipped) + " cells skipped (series too short for the perturbation)");
    if (failed) log::warn(std::to_string(failed) + " cells failed and were recorded as error rows");
    return run;
}

std::string records_csv(const SweepRun& run) {
    std::string out =
        "model,dataset,perturbation_id,L,temperature,N,aggregator,trial,window_index,loss_mse,loss_mae,"
        "mean_similarity,status\n";
    for (std::size_t p = 0; p < run.points.size(); ++p) {
        const SweepPoint& point = run.points[p];
        const std::string head = csv_join({run.model, run.dataset, point.perturbation_id,
                                           std::to_string(point.context_length), format_double(point.temperature)});
        for (std::size_t t = 0; t < run.trials; ++t) {
            for (std::size_t w = 0; w < run.windows[p]; ++w) {
                const Cell& c = run.cell(p, t, w);
                if (c.status != CellStatus::Ok) {
                    const std::string status = (c.status == CellStatus::Skipped ? "skipped: " : "error: ") + c.message;
                    out += head + ",,," + std::to_string(t) + "," + std::to_string(w) + ",,,," + csv_escape(status) + "\n";
                    continue;
                }
                const std::string sim = format_double(c.result.mean_similarity);
                for (std::size_t n : run.budgets) {
                    const BudgetResult& b = c.result.per_budget.at(n);
                    const std::string mid = std::to_string(n);
                    const std::string tail = std::to_string(t) + "," + std::to_string(w);
                    out += head + "," + mid + ",em," + tail + "," + format_double(b.em_loss) + "," +
                           format_double(b.em_mae) + "," + sim + ",ok\n";
                    out += head + "," + mid + ",mv," + tail + "," + format_double(b.mv_loss) + "," +
                           format_double(b.mv_mae) + "," + sim + ",ok\n";
                }
            }
        }
    }
    return out;
}

struct Stats {
    std::size_t count = 0;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double mae_mean = 0.0;
};

Stats stats_of(const std::vector<double>& mse, const std::vector<double>& mae) {
    Stats s;
    s.count = mse.size();
    if (s.count == 0) return s;
    KahanSum a, b;
    for (double v : mse) a.add(v);
    for (double v : mae) b.add(v);
    s.mse_mean = a.value() / static_cast<double>(s.count);
    s.mae_mean = b.value() / static_cast<double>(s.count);
    s.mse_std = s.count > 1 ? sample_std(mse) : 0.0;
    return s;
}

struct PointSummary {
    // aggregator ("em"/"mv") -> budget -> stats over (trial, window)
    std::map<std::string, std::map<std::size_t, Stats>> by_agg;
    std::map<std::string, std::size_t> star;
    double mean_similarity = 1.0;
    std::size_t ok_cells = 0;
};

PointSummary summarize_point(const SweepRun& run, std::size_t p) {
    PointSummary s;
    KahanSum sim;
    for (const char* agg : {"em", "mv"}) {
        const bool em = agg[0] == 'e';
        std::map<std::size_t, double> means;
        for (std::size_t n : run.budgets) {
            std::vector<double> mse, mae;
            for (std::size_t t = 0; t < run.trials; ++t) {
                for (std::size_t w = 0; w < run.windows[p]; ++w) {
                    const Cell& c = run.cell(p, t, w);
                    if (c.status != CellStatus::Ok) continue;
                    const BudgetResult& b = c.result.per_budget.at(n);
                    mse.push_back(em ? b.em_loss : b.mv_loss);
                    mae.push_back(em ? b.em_mae : b.mv_mae);
                }
            }
            const Stats st = stats_of(mse, mae);
            s.by_agg[agg][n] = st;
            if (st.count > 0) means[n] = st.mse_mean;
        }
        if (!means.empty()) s.star[agg] = convergence_point(means);
    }
    for (std::size_t t = 0; t < run.trials; ++t) {
        for (std::size_t w = 0; w < run.windows[p]; ++w) {
            const Cell& c = run.cell(p, t, w);
            if (c.status != CellStatus::Ok) continue;
            sim.add(c.result.mean_similarity);
            ++s.ok_cells;
        }
    }
    if (s.ok_cells > 0) s.mean_similarity = sim.value() / static_cast<double>(s.ok_cells);
    return s;
}

ojson summary_json(const std::string& command, const RunConfig& cfg, const SweepRun& run,
                   const std::vector<PointSummary>& summaries) {
    ojson j;
    j["tool"] = "divscale";
    j["version"] = DIVSCALE_VERSION;
    j["command"] = command;
    j["model"] = run.model;
    j["dataset"] = run.dataset;
    j["config"] = cfg.to_json();
    ojson results = ojson::array();
    for (std::size_t p = 0; p < run.points.size(); ++p) {
        const SweepPoint& point = run.points[p];
        const PointSummary& s = summaries[p];
        ojson r;
        r["perturbation_id"] = point.perturbation_id;
        if (point.spec) r["perturbation"] = point.spec->label();
        r["L"] = point.context_length;
        r["temperature"] = point.temperature;
        r["axis_value"] = point.axis_value;
        r["windows"] = run.windows[p];
        r["ok_cells"] = s.ok_cells;
        r["mean_similarity"] = s.mean_similarity;
        for (const auto& [agg, per_n] : s.by_agg) {
            ojson a;
            ojson pts = ojson::array();
            for (const auto& [n, st] : per_n) {
                if (st.count == 0) continue;
                pts.push_back({{"N", n}, {"mse_mean", st.mse_mean}, {"mse_std", st.mse_std},
                               {"mae_mean", st.mae_mean}, {"count", st.count}});
            }
            a["points"] = pts;
            a["star_N"] = s.star.contains(agg) ? ojson(s.star.at(agg)) : ojson(nullptr);
            r[agg] = a;
        }
        results.push_back(r);
    }
    j["results"] = results;
    return j;
}

std::unique_ptr<Backend> backend_for(const RunConfig& cfg) {
    auto backend = make_backend(cfg);
    log::info("backend: " + backend->descriptor().name);
    return backend;
}

}  // namespace

// ---- commands -------------------------------------------------------------

void cmd_scale_sweep(const RunConfig& cfg) {
    cfg.validate();
    const TimeSeries series = load_series(cfg);
    auto backend = backend_for(cfg);

    std::vector<std::string> ids = cfg.perturbations.value_or(std::vector<std::string>{"none"});
    std::vector<std::optional<PerturbationSpec>> specs;
    for (const auto& id : ids) {
        if (parse_perturbation_kind(id) == PerturbationKind::None) {
            specs.emplace_back(std::nullopt);
        } else {
            const auto s = specs_for({id}, *backend);
            if (!s.empty()) specs.emplace_back(s.front());
        }
    }
    if (specs.empty()) throw ConfigError("scale-sweep has no usable perturbations");

    std::vector<double> values;
    if (cfg.sweep_axis == "temperature") {
        values = cfg.sweep_values.value_or(temperature_grid());
    } else if (cfg.sweep_axis == "context_length") {
        if (cfg.sweep_values) {
            values = *cfg.sweep_values;
        } else {
            for (std::size_t l : context_length_grid()) values.push_back(static_cast<double>(l));
        }
    } else {
        values = {cfg.temperature};
    }

    std::vector<SweepPoint> points;
    for (const auto& spec : specs) {
        for (double v : values) {
            SweepPoint p;
            p.perturbation_id = spec ? spec->id() : "none";
            p.spec = spec;
            p.context_length = cfg.context_length;
            p.temperature = cfg.temperature;
            p.axis_value = v;
            if (cfg.sweep_axis == "temperature") {
                if (!(v >= 0.0)) throw ConfigError("sweep temperature must be >= 0");
                p.temperature = v;
            } else if (cfg.sweep_axis == "context_length") {
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("sweep context lengths must be integers >= 1");
                p.context_length = static_cast<std::size_t>(v);
            }
            points.push_back(std::move(p));
        }
    }

    const SweepRun run = run_sweep(cfg, *backend, series, std::move(points), cfg.trials.value_or(1));
    std::vector<PointSummary> summaries;
    for (std::size_t p = 0; p < run.points.size(); ++p) summaries.push_back(summarize_point(run, p));

    const fs::path out(cfg.out);
    write_file(out / "records.csv", records_csv(run));
    write_file(out / "summary.json", summary_json("scale-sweep", cfg, run, summaries).dump(2) + "\n");

    // One panel per (perturbation, aggregator).
    std::map<std::string, std::string> panels;
    for (std::size_t p = 0; p < run.points.size(); ++p) {
        const SweepPoint& point = run.points[p];
        for (const auto& [agg, per_n] : summaries[p].by_agg) {
            std::string name = "scale_" + cfg.sweep_axis;
            if (point.perturbation_id != "none") name += "_" + point.perturbation_id;
            name += "_" + agg + ".csv";
            std::string& body = panels[name];
            if (body.empty()) body = "value,N,mse_mean,mse_std,star_N\n";
            const auto star = summaries[p].star.find(agg);
            for (const auto& [n, st] : per_n) {
                if (st.count == 0) continue;
                body += csv_join({format_double(point.axis_value), std::to_string(n), format_double(st.mse_mean),
                                  format_double(st.mse_std),
                                  star == summaries[p].star.end() ? "" : std::to_string(star->second)});
                body += '\n';
            }
        }
    }
    for (const auto& [name, body] : panels) write_file(out / "plotdata" / name, body);
}

void cmd_perturb_sweep(const RunConfig& cfg) {
    cfg.validate();
    const TimeSeries series = load_series(cfg);
    auto backend = backend_for(cfg);

    std::vector<SweepPoint> points;
    SweepPoint base;
    base.context_length = cfg.context_length;
    base.temperature = cfg.temperature;
    base.axis_value = cfg.temperature;
    points.push_back(base);
    for (const auto& spec : specs_for(cfg.perturbations.value_or(all_perturbation_ids()), *backend)) {
        if (spec.kind == PerturbationKind::None) continue;
        SweepPoint p = base;
        p.perturbation_id = spec.id();
        p.spec = spec;
        points.push_back(std::move(p));
    }

    const SweepRun run = run_sweep(cfg, *backend, series, std::move(points), cfg.trials.value_or(1));
    std::vector<PointSummary> summaries;
    for (std::size_t p = 0; p < run.points.size(); ++p) summaries.push_back(summarize_point(run, p));

    const fs::path out(cfg.out);
    write_file(out / "records.csv", records_csv(run));
    write_file(out / "summary.json", summary_json("perturb-sweep", cfg, run, summaries).dump(2) + "\n");

    const std::size_t n_top = run.budgets.back();
    std::string failures = "perturbation_id,aggregator,N,baseline_mse,perturbed_mse,ratio,failed\n";
    std::map<std::string, bool> failed_under_rule;
    for (const char* agg : {"em", "mv"}) {
        const Stats& b = summaries[0].by_agg.at(agg).at(n_top);
        if (b.count == 0) throw BackendError("baseline produced no usable windows; cannot judge failures");
        std::map<std::string, double> by_id;
        for (std::size_t p = 1; p < run.points.size(); ++p) {
            const Stats& st = summaries[p].by_agg.at(agg).at(n_top);
            if (st.count > 0) by_id[run.points[p].perturbation_id] = st.mse_mean;
        }
        std::map<std::string, FailureVerdict> verdicts;
        if (b.mse_mean > 0.0) {
            for (auto& v : detect_failures(by_id, b.mse_mean)) verdicts[v.perturbation_id] = v;
        } else {
            // A perfect baseline: any loss at all is a regression.
            for (const auto& [id, m] : by_id) verdicts[id] = {id, 0.0, m, m > 0.0};
        }
        for (std::size_t p = 1; p < run.points.size(); ++p) {
            const std::string& id = run.points[p].perturbation_id;
            const auto v = verdicts.find(id);
            const bool failed = v == verdicts.end() || v->second.failed;  // no results counts as failed
            const double perturbed = v == verdicts.end() ? std::nan("") : v->second.perturbed_mse;
            const double ratio = b.mse_mean > 0.0 ? perturbed / b.mse_mean : std::nan("");
            failures += csv_join({id, agg, std::to_string(n_top), format_double(b.mse_mean), format_double(perturbed),
                                  format_double(ratio), failed ? "true" : "false"});
            failures += '\n';
            if (cfg.failure_aggregator == agg) failed_under_rule[id] = failed;
        }
    }
    write_file(out / "failures.csv", failures);

    std::string valid;
    for (std::size_t p = 1; p < run.points.size(); ++p) {
        const std::string& id = run.points[p].perturbation_id;
        if (!failed_under_rule.at(id)) valid += id + "\n";
    }
    write_file(out / "valid_perturbations.txt", valid);

    for (const char* agg : {"em", "mv"}) {
        std::string body = "perturbation_id,N,mse_mean,mse_std,star_N,mean_similarity\n";
        for (std::size_t p = 0; p < run.points.size(); ++p) {
            const auto star = summaries[p].star.find(agg);
            for (const auto& [n, st] : summaries[p].by_agg.at(agg)) {
                if (st.count == 0) continue;
                body += csv_join({run.points[p].perturbation_id, std::to_string(n), format_double(st.mse_mean),
                                  format_double(st.mse_std),
                                  star == summaries[p].star.end() ? "" : std::to_string(star->second),
                                  format_double(summaries[p].mean_similarity)});
                body += '\n';
            }
        }
        write_file(out / "plotdata" / (std::string("perturb_") + agg + ".csv"), body);
    }
}

void cmd_robustmse(const RunConfig& cfg) {
    cfg.validate();
    const TimeSeries series = load_series(cfg);
    auto backend = backend_for(cfg);
    const auto windows = make_windows(series, cfg, cfg.context_length);

    const auto ids = cfg.valid_perturbations ? *cfg.valid_perturbations
                                             : cfg.perturbations.value_or(all_perturbation_ids());
    std::vector<PerturbationSpec> agnostic, specific;
    for (const auto& spec : specs_for(ids, *backend)) {
        if (spec.kind == PerturbationKind::None) continue;
        (is_task_specific(spec.kind) ? specific : agnostic).push_back(spec);
    }

    RobustMseOptions opts;
    opts.budget = cfg.robust_n;
    opts.trials = cfg.trials.value_or(5);
    opts.combine = parse_combine(cfg.combine);
    opts.decode = DecodeParams{cfg.temperature, cfg.top_p};
    opts.horizon = cfg.horizon;
    opts.seeds = SeedTree(cfg.seed);
    opts.normalize = cfg.normalize;
    opts.jobs = cfg.jobs;

    std::string csv = "strategy_class,aggregator,mean,std,N,T\n";
    ojson reports = ojson::array();
    auto emit = [&](const std::string& cls, const RobustMseReport& r) {
        for (const auto& [agg, ms] : {std::pair<const char*, MeanStd>{"em", r.em}, {"mv", r.mv}}) {
            csv += csv_join({cls, agg, format_double(ms.mean), format_double(ms.std), std::to_string(r.budget),
                             std::to_string(r.trials)});
            csv += '\n';
        }
        ojson j = ojson::parse(r.to_json());
        j["strategy_class"] = cls;
        reports.push_back(j);
    };

    // Standard-sampling reference row.
    RobustMseOptions base_opts = opts;
    if (cfg.baseline_mode == "single") base_opts.budget = 1;
    emit("standard", robust_mse(*backend, windows, {PerturbationSpec::defaults(PerturbationKind::None)}, base_opts));
    for (auto [cls, specs] : {std::pair{StrategyClass::TaskAgnostic, &agnostic},
                              std::pair{StrategyClass::TaskSpecific, &specific}}) {
        if (specs->empty()) {
            log::warn(std::string("no ") + std::string(strategy_class_name(cls)) + " perturbations configured");
            continue;
        }
        opts.strategy_class = cls;
        emit(std::string(strategy_class_name(cls)), robust_mse(*backend, windows, *specs, opts));
    }

    const fs::path out(cfg.out);
    write_file(out / "robustmse.csv", csv);
    ojson j;
    j["tool"] = "divscale";
    j["version"] = DIVSCALE_VERSION;
    j["model"] = backend->descriptor().name;
    j["dataset"] = series.name;
    j["windows"] = windows.size();
    j["reports"] = reports;
    write_file(out / "robustmse.json", j.dump(2) + "\n");
}

void cmd_theory(const RunConfig& cfg) {
    cfg.validate();
    std::string table = "rho,lgood,lbad,l0,N,analytic,mc_mean,mc_stderr\n";
    std::string crossover = "rho,lgood,lbad,l0,n_star,predicted,empirical\n";
    std::uint64_t row = 0, set = 0;
    for (double rho : cfg.theory_rho) {
        for (double lg : cfg.theory_loss_good) {
            for (double lb : cfg.theory_loss_bad) {
                for (double l0 : cfg.theory_loss_0) {
                    const TheoryParams p{rho, lg, lb, l0};
                    for (std::size_t n : cfg.theory_n) {
                        const double analytic = expected_min_em(p, n);
                        const auto mc = mc_expected_min(p, n, cfg.theory_trials, derive_seed(cfg.seed, "theory", row++),
                                                        cfg.jobs);
                        table += csv_join({format_double(rho), format_double(lg), format_double(lb), format_double(l0),
                                           std::to_string(n), format_double(analytic), format_double(mc.mean),
                                           format_double(mc.std_err)});
                        table += '\n';
                    }
                    try {
                        p.validate();
                    } catch (const InvalidArgument& e) {
                        log::warn(std::string("no crossover for this parameter set: ") + e.what());
                        ++set;
                        continue;
                    }
                    const double n_star = critical_threshold(p);
                    const auto predicted = static_cast<std::size_t>(std::floor(n_star)) + 1;
                    const auto empirical = empirical_crossover(p, cfg.theory_trials,
                                                               derive_seed(cfg.seed, "theory-crossover", set++),
                                                               100000, cfg.jobs);
                    crossover += csv_join({format_double(rho), format_double(lg), format_double(lb), format_double(l0),
                                           format_double(n_star), std::to_string(predicted),
                                           std::to_string(empirical)});
                    crossover += '\n';
                }
            }
        }
    }
    const fs::path out(cfg.out);
    write_file(out / "theory.csv", table);
    write_file(out / "crossover.csv", crossover);
}

void cmd_similarity(const RunConfig& cfg) {
    cfg.validate();
    PerturbationKind kind;
    try {
        kind = parse_perturbation_kind(cfg.fidelity_family);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (kind == PerturbationKind::None) throw ConfigError("similarity needs a perturbation family other than none");
    const TimeSeries series = load_series(cfg);
    auto backend = backend_for(cfg);
    const auto specs = specs_for({cfg.fidelity_family}, *backend);
    if (specs.empty()) throw CapabilityError("backend cannot run the '" + cfg.fidelity_family + "' family");
    const auto windows = make_windows(series, cfg, cfg.context_length);

    FidelityOptions opts;
    opts.budget = cfg.fidelity_budget;
    opts.decode = DecodeParams{cfg.temperature, cfg.top_p};
    opts.horizon = cfg.horizon;
    opts.seeds = SeedTree(cfg.seed);
    opts.jobs = cfg.jobs;
    const auto grid = cfg.fidelity_grid.value_or(default_intensity_grid(kind));
    const auto rows = fidelity_curve(*backend, windows, specs.front(), grid, opts);

    std::string csv = "intensity,mean_similarity,mean_mse\n";
    for (const auto& r : rows) {
        csv += csv_join({format_double(r.intensity), format_double(r.mean_similarity), format_double(r.mean_mse)});
        csv += '\n';
    }
    write_file(fs::path(cfg.out) / "similarity.csv", csv);
}

// ---- backend conformance -------------------------------------------------

bool ConformanceReport::conformant() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

std::string ConformanceReport::to_text() const {
    std::string out;
    for (const auto& c : checks) {
        out += (c.passed ? "PASS " : "FAIL ") + c.name;
        if (!c.detail.empty()) out += ": " + c.detail;
        out += '\n';
    }
    out += conformant() ? "conformant\n" : "not conformant\n";
    return out;
}

namespace {

std::string shape_problem(const protocol::Response& r, std::size_t samples, std::size_t rows, std::size_t cols) {
    if (r.error) return "error response [" + r.error->code + "]: " + r.error->message;
    if (r.samples.size() != samples) {
        return "expected " + std::to_string(samples) + " samples, got " + std::to_string(r.samples.size());
    }
    for (const auto& m : r.samples) {
        if (m.rows() != rows || m.cols() != cols) {
            return "expected [" + std::to_string(rows) + "][" + std::to_string(cols) + "] samples, got [" +
                   std::to_string(m.rows()) + "][" + std::to_string(m.cols()) + "]";
        }
        if (!m.all_finite()) return "non-finite sample values";
    }
    return {};
}

std::string expect_error(const protocol::Response& r, const std::string& code) {
    if (!r.error) return "expected a '" + code + "' error, got samples";
    if (r.error->code != code) return "expected error code '" + code + "', got '" + r.error->code + "'";
    return {};
}

}  // namespace

ConformanceReport run_conformance(const std::vector<std::string>& command, std::ostream* transcript) {
    ConformanceReport report;
    auto add = [&](std::string name, const std::string& problem, std::string ok_detail = {}) {
        report.checks.push_back({std::move(name), problem.empty(), problem.empty() ? std::move(ok_detail) : problem});
    };

    ExternalOptions opts;
    opts.transcript = transcript;
    opts.request_timeout = std::chrono::milliseconds(30000);
    std::unique_ptr<ExternalBackend> backend;
    try {
        backend = std::make_unique<ExternalBackend>(command, opts);
    } catch (const std::exception& e) {
        add("handshake", e.what());
        return report;
    }
    const BackendDescriptor& d = backend->descriptor();
    {
        std::string problem;
        if (d.name.empty()) problem = "empty backend name";
        else if (d.max_context < 1) problem = "max_context must be >= 1";
        else if (d.d_out < 1) problem = "d_out must be >= 1";
        add("handshake", problem,
            d.name + " max_context=" + std::to_string(d.max_context) + " d_out=" + std::to_string(d.d_out));
    }

    const std::size_t length = std::min<std::size_t>(24, d.max_context);
    Matrix context(length, 1);
    for (std::size_t t = 0; t < length; ++t) context(t, 0) = 1.0 + 0.25 * static_cast<double>(t);

    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            add(name, e.what());
        }
    };

    guarded("forecast_shape", [&] {
        protocol::Request r;
        r.context = context;
        r.horizon = 6;
        r.num_samples = 3;
        r.temperature = 0.5;
        r.seed = 42;
        add("forecast_shape", shape_problem(backend->exchange(r), 3, 6, d.d_out));
    });
    guarded("forecast_single", [&] {
        protocol::Request r;
        r.context = context;
        r.horizon = 1;
        r.num_samples = 1;
        r.seed = 7;
        add("forecast_single", shape_problem(backend->exchange(r), 1, 1, d.d_out));
    });
    guarded("reconstruct", [&] {
        protocol::Request r;
        r.op = "reconstruct";
        r.context = context;
        r.horizon = length;
        r.num_samples = 1;
        r.temperature = 0.5;
        r.seed = 11;
        const auto resp = backend->exchange(r);
        if (d.supports_reconstruction) {
            add("reconstruct", shape_problem(resp, 1, length, 1));
        } else {
            add("reconstruct", expect_error(resp, "capability"), "capability error as declared");
        }
    });
    guarded("malformed_json", [&] {
        const auto resp = protocol::decode_response(backend->exchange_raw("{\"id\": 1, \"op\": "));
        std::string problem = expect_error(resp, "bad_request");
        if (problem.empty() && resp.id != 0) problem = "expected id 0, got " + std::to_string(resp.id);
        add("malformed_json", problem);
    });
    guarded("invalid_request", [&] {
        protocol::Request r;
        r.context = context;
        r.horizon = 4;
        r.num_samples = 0;
        add("invalid_request", expect_error(backend->exchange(r), "bad_request"));
    });
    guarded("unknown_op", [&] {
        protocol::Request r;
        r.op = "explode";
        r.context = context;
        add("unknown_op", expect_error(backend->exchange(r), "bad_request"));
    });
    guarded("shutdown", [&] {
        backend->shutdown();
        const auto status = backend->exit_status();
        if (!status) {
            add("shutdown", "backend did not exit after shutdown");
        } else {
            add("shutdown", *status == 0 ? "" : "exit status " + std::to_string(*status));
        }
    });
    return report;
}

int cmd_validate_backend(const RunConfig& cfg, std::ostream& report) {
    const std::string prefix = "external:";
    if (cfg.backend.rfind(prefix, 0) != 0) throw ConfigError("validate-backend needs --backend external:CMD");
    const auto argv = split_command(cfg.backend.substr(prefix.size()));
    if (argv.empty()) throw ConfigError("external backend needs a command");

    std::ostringstream transcript;
    const ConformanceReport r = run_conformance(argv, cfg.transcript.empty() ? nullptr : &transcript);
    if (!cfg.transcript.empty()) write_file(cfg.transcript, transcript.str());
    report << r.to_text();
    return r.conformant() ? 0 : 2;
}

}  // namespace divscale
