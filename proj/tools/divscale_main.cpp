#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "divscale/commands.hpp"
#include "divscale/config.hpp"
#include "divscale/log.hpp"

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    std::optional<std::string> dataset;
    std::optional<std::string> target;
    std::optional<std::string> split;
    std::optional<std::string> backend;
    std::optional<std::size_t> backend_procs;
    std::optional<std::string> budgets;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<std::size_t> context_length;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> stride;
    bool skip_errors = false;
    bool normalize = false;
    std::optional<std::string> perturbations;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> max_windows;
    std::optional<std::string> pool_mode;
    std::optional<std::string> axis;
    std::optional<std::string> values;
    std::optional<std::string> failure_aggregator;
    std::optional<std::size_t> robust_n;
    std::optional<std::string> combine;
    std::optional<std::string> valid;
    std::optional<std::string> baseline_mode;
    std::optional<std::string> family;
    std::optional<std::string> grid;
    std::optional<std::size_t> fidelity_budget;
    std::optional<std::string> rho;
    std::optional<std::string> lgood;
    std::optional<std::string> lbad;
    std::optional<std::string> l0;
    std::optional<std::string> theory_n;
    std::optional<std::size_t> mc_trials;
    std::optional<std::string> transcript;
    int verbose = 0;
};

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == '\n' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// A list of ids, or @FILE holding one id per line (valid_perturbations.txt).
std::vector<std::string> read_ids(const std::string& arg) {
    if (arg.empty() || arg[0] != '@') return split_ids(arg);
    std::ifstream in(arg.substr(1));
    if (!in) throw divscale::ConfigError("cannot read '" + arg.substr(1) + "'");
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return split_ids(all);
}

divscale::RunConfig resolve(const Flags& f) {
    using namespace divscale;
    RunConfig cfg = f.config ? load_config(*f.config) : RunConfig{};
    if (f.seed) cfg.seed = *f.seed;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (f.out) cfg.out = *f.out;
    if (f.dataset) cfg.dataset = *f.dataset;
    if (f.target) cfg.target = *f.target;
    if (f.split) cfg.split = *f.split;
    if (f.backend) cfg.backend = *f.backend;
    if (f.backend_procs) cfg.backend_procs = *f.backend_procs;
    if (f.budgets) cfg.budgets = parse_size_list(*f.budgets);
    if (f.temperature) cfg.temperature = *f.temperature;
    if (f.top_p) cfg.top_p = *f.top_p;
    if (f.context_length) cfg.context_length = *f.context_length;
    if (f.horizon) cfg.horizon = *f.horizon;
    if (f.stride) cfg.stride = *f.stride;
    if (f.skip_errors) cfg.skip_errors = true;
    if (f.normalize) cfg.normalize = true;
    if (f.perturbations) cfg.perturbations = read_ids(*f.perturbations);
    if (f.trials) cfg.trials = *f.trials;
    if (f.max_windows) cfg.max_windows = *f.max_windows;
    if (f.pool_mode) cfg.pool_mode = *f.pool_mode;
    if (f.axis) cfg.sweep_axis = *f.axis;
    if (f.values) cfg.sweep_values = parse_double_list(*f.values);
    if (f.failure_aggregator) cfg.failure_aggregator = *f.failure_aggregator;
    if (f.robust_n) cfg.robust_n = *f.robust_n;
    if (f.combine) cfg.combine = *f.combine;
    if (f.valid) cfg.valid_perturbations = read_ids(*f.valid);
    if (f.baseline_mode) cfg.baseline_mode = *f.baseline_mode;
    if (f.family) cfg.fidelity_family = *f.family;
    if (f.grid) cfg.fidelity_grid = parse_double_list(*f.grid);
    if (f.fidelity_budget) cfg.fidelity_budget = *f.fidelity_budget;
    if (f.rho) cfg.theory_rho = parse_double_list(*f.rho);
    if (f.lgood) cfg.theory_loss_good = parse_double_list(*f.lgood);
    if (f.lbad) cfg.theory_loss_bad = parse_double_list(*f.lbad);
    if (f.l0) cfg.theory_loss_0 = parse_double_list(*f.l0);
    if (f.theory_n) cfg.theory_n = parse_size_list(*f.theory_n);
    if (f.mc_trials) cfg.theory_trials = *f.mc_trials;
    if (f.transcript) cfg.transcript = *f.transcript;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diversified inference-time scaling harness for time-series forecasters", "divscale"};
    app.set_version_flag("--version", DIVSCALE_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    Flags f;
    app.add_option("--config", f.config, "JSON run configuration (flags override it)");
    app.add_option("--seed", f.seed, "Master seed");
    app.add_option("--jobs", f.jobs, "Worker threads (0 = all cores)");
    app.add_option("--out", f.out, "Output directory");
    app.add_option("--dataset", f.dataset, "CSV file, or synthetic[:LENGTH]");
    app.add_option("--target", f.target, "Target column (default OT)");
    app.add_option("--split", f.split, "full, etth1, ettm1, electricity, traffic or frac:TRAIN,VAL");
    app.add_option("--backend", f.backend, "seasonal-ar | two-point | external:CMD");
    app.add_option("--backend-procs", f.backend_procs, "Processes for an external backend");
    app.add_option("--budgets", f.budgets, "Budget list, e.g. 1,2,4 or 1:128 for powers of two");
    app.add_option("--temperature", f.temperature, "Sampling temperature");
    app.add_option("--top-p", f.top_p, "Nucleus sampling threshold");
    app.add_option("--context-length", f.context_length, "Context length L");
    app.add_option("--horizon", f.horizon, "Forecast horizon H");
    app.add_option("--stride", f.stride, "Sliding-window stride");
    app.add_flag("--skip-errors", f.skip_errors, "Record backend errors as rows instead of aborting");
    app.add_flag("--normalize", f.normalize, "z-score each context window");
    app.add_option("--perturbations", f.perturbations, "Perturbation ids (comma list or @FILE)");
    app.add_option("--trials", f.trials, "Independent trials");
    app.add_option("--max-windows", f.max_windows, "Use at most this many windows (0 = all)");
    app.add_option("--pool-mode", f.pool_mode, "nested | independent");
    app.add_option("--axis", f.axis, "scale-sweep axis: temperature | context_length | none");
    app.add_option("--values", f.values, "scale-sweep axis values");
    app.add_option("--failure-aggregator", f.failure_aggregator, "em | mv");
    app.add_option("--robust-n", f.robust_n, "RobustMSE budget");
    app.add_option("--combine", f.combine, "RobustMSE configuration combine: min | mean");
    app.add_option("--valid", f.valid, "Validated perturbations (comma list or @FILE)");
    app.add_option("--baseline-mode", f.baseline_mode, "RobustMSE reference row: budget | single");
    app.add_option("--family", f.family, "similarity: perturbation family");
    app.add_option("--grid", f.grid, "similarity: intensity grid");
    app.add_option("--fidelity-budget", f.fidelity_budget, "similarity: candidates per window");
    app.add_option("--rho", f.rho, "theory: success probabilities");
    app.add_option("--lgood", f.lgood, "theory: good losses");
    app.add_option("--lbad", f.lbad, "theory: bad losses");
    app.add_option("--l0", f.l0, "theory: standard-sampling losses");
    app.add_option("--n", f.theory_n, "theory: budgets");
    app.add_option("--mc-trials", f.mc_trials, "theory: Monte Carlo trials");
    app.add_option("--transcript", f.transcript, "validate-backend: write the exchange here");
    app.add_flag("-v,--verbose", f.verbose, "More logging (repeat for debug)");

    auto* scale = app.add_subcommand("scale-sweep", "Sweep temperature or context length against budgets");
    auto* perturb = app.add_subcommand("perturb-sweep", "Evaluate perturbations against the unperturbed baseline");
    auto* robust = app.add_subcommand("robustmse", "RobustMSE per strategy class");
    auto* theory = app.add_subcommand("theory", "Analytic vs Monte Carlo expected minimum and crossovers");
    auto* validate = app.add_subcommand("validate-backend", "Protocol conformance of an external backend");
    auto* similarity = app.add_subcommand("similarity", "Input similarity and loss per perturbation intensity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    using divscale::log::Level;
    divscale::log::set_level(f.verbose >= 2 ? Level::Debug : f.verbose == 1 ? Level::Info : Level::Warn);

    try {
        const divscale::RunConfig cfg = resolve(f);
        if (scale->parsed()) divscale::cmd_scale_sweep(cfg);
        else if (perturb->parsed()) divscale::cmd_perturb_sweep(cfg);
        else if (robust->parsed()) divscale::cmd_robustmse(cfg);
        else if (theory->parsed()) divscale::cmd_theory(cfg);
        else if (similarity->parsed()) divscale::cmd_similarity(cfg);
        else if (validate->parsed()) return divscale::cmd_validate_backend(cfg, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "divscale: " << e.what() << '\n';
        return divscale::exit_code_for(e);
    }
    return 0;
}
