#include "divscale/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "divscale/dataset.hpp"
#include "divscale/external_backend.hpp"
#include "divscale/rng.hpp"

namespace divscale {

using nlohmann::json;

namespace {

template <class T>
void read_key(const json& j, const char* key, T& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <class T>
void read_key(const json& j, const char* key, std::optional<T>& out) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (it->is_null()) {
        out.reset();
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "backend", "backend_params", "backend_procs", "dataset", "target", "split",
        "context_length", "horizon", "stride", "budgets", "temperature", "top_p",
        "perturbations", "seed", "trials", "out", "jobs", "max_windows", "normalize",
        "skip_errors", "pool_mode", "sweep_axis", "sweep_values", "failure_aggregator",
        "robust_n", "combine", "valid_perturbations", "baseline_mode", "fidelity_family", "fidelity_grid",
        "fidelity_budget", "theory_rho", "theory_loss_good", "theory_loss_bad", "theory_loss_0",
        "theory_n", "theory_trials", "transcript",
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(',', start);
        parts.push_back(trim(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return parts;
}

std::size_t parse_size(const std::string& s) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ConfigError("'" + s + "' is not a non-negative integer");
    }
    return v;
}

double parse_real(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ConfigError("'" + s + "' is not a finite number");
    }
    return v;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::size_t lo = parse_size(trim(text.substr(0, colon)));
        const std::size_t hi = parse_size(trim(text.substr(colon + 1)));
        if (lo < 1 || hi < lo) throw ConfigError("bad power-of-two range '" + text + "'");
        std::vector<std::size_t> out;
        for (std::size_t n = 1; n <= hi; n *= 2) {
            if (n >= lo) out.push_back(n);
        }
        if (out.empty()) throw ConfigError("power-of-two range '" + text + "' is empty");
        return out;
    }
    std::vector<std::size_t> out;
    for (const auto& p : split_commas(text)) out.push_back(parse_size(p));
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& p : split_commas(text)) out.push_back(parse_real(p));
    return out;
}

void apply_json(RunConfig& cfg, const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    read_key(j, "backend", cfg.backend);
    if (j.contains("backend_params")) {
        if (!j["backend_params"].is_object()) throw ConfigError("backend_params must be an object");
        cfg.backend_params = j["backend_params"];
    }
    read_key(j, "backend_procs", cfg.backend_procs);
    read_key(j, "dataset", cfg.dataset);
    read_key(j, "target", cfg.target);
    read_key(j, "split", cfg.split);
    read_key(j, "context_length", cfg.context_length);
    read_key(j, "horizon", cfg.horizon);
    read_key(j, "stride", cfg.stride);
    read_key(j, "budgets", cfg.budgets);
    read_key(j, "temperature", cfg.temperature);
    read_key(j, "top_p", cfg.top_p);
    read_key(j, "perturbations", cfg.perturbations);
    read_key(j, "seed", cfg.seed);
    read_key(j, "trials", cfg.trials);
    read_key(j, "out", cfg.out);
    read_key(j, "jobs", cfg.jobs);
    read_key(j, "max_windows", cfg.max_windows);
    read_key(j, "normalize", cfg.normalize);
    read_key(j, "skip_errors", cfg.skip_errors);
    read_key(j, "pool_mode", cfg.pool_mode);
    read_key(j, "sweep_axis", cfg.sweep_axis);
    read_key(j, "sweep_values", cfg.sweep_values);
    read_key(j, "failure_aggregator", cfg.failure_aggregator);
    read_key(j, "robust_n", cfg.robust_n);
    read_key(j, "combine", cfg.combine);
    read_key(j, "valid_perturbations", cfg.valid_perturbations);
    read_key(j, "baseline_mode", cfg.baseline_mode);
    read_key(j, "fidelity_family", cfg.fidelity_family);
    read_key(j, "fidelity_grid", cfg.fidelity_grid);
    read_key(j, "fidelity_budget", cfg.fidelity_budget);
    read_key(j, "theory_rho", cfg.theory_rho);
    read_key(j, "theory_loss_good", cfg.theory_loss_good);
    read_key(j, "theory_loss_bad", cfg.theory_loss_bad);
    read_key(j, "theory_loss_0", cfg.theory_loss_0);
    read_key(j, "theory_n", cfg.theory_n);
    read_key(j, "theory_trials", cfg.theory_trials);
    read_key(j, "transcript", cfg.transcript);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

void RunConfig::validate() const {
    if (context_length < 1) throw ConfigError("context_length must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    if (budgets.empty()) throw ConfigError("budgets must not be empty");
    for (std::size_t n : budgets) {
        if (n < 1) throw ConfigError("budgets must be >= 1");
    }
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (trials && *trials < 1) throw ConfigError("trials must be >= 1");
    if (backend_procs < 1) throw ConfigError("backend_procs must be >= 1");
    if (sweep_axis != "temperature" && sweep_axis != "context_length" && sweep_axis != "none") {
        throw ConfigError("sweep_axis must be temperature, context_length or none");
    }
    if (failure_aggregator != "em" && failure_aggregator != "mv") {
        throw ConfigError("failure_aggregator must be em or mv");
    }
    if (robust_n < 1) throw ConfigError("robust_n must be >= 1");
    if (baseline_mode != "budget" && baseline_mode != "single") {
        throw ConfigError("baseline_mode must be budget or single");
    }
    if (fidelity_budget < 1) throw ConfigError("fidelity_budget must be >= 1");
    if (theory_trials < 1) throw ConfigError("theory_trials must be >= 1");
    parse_pool_mode(pool_mode);
    parse_combine(combine);
    auto check_ids = [](const std::optional<std::vector<std::string>>& ids) {
        if (!ids) return;
        for (const auto& id : *ids) {
            try {
                parse_perturbation_kind(id);
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what());
            }
        }
    };
    check_ids(perturbations);
    check_ids(valid_perturbations);
}

nlohmann::ordered_json RunConfig::to_json() const {
    nlohmann::ordered_json j;
    j["backend"] = backend;
    j["backend_params"] = backend_params;
    j["backend_procs"] = backend_procs;
    j["dataset"] = dataset;
    j["target"] = target;
    j["split"] = split;
    j["context_length"] = context_length;
    j["horizon"] = horizon;
    j["stride"] = stride;
    j["budgets"] = budgets;
    j["temperature"] = temperature;
    j["top_p"] = top_p;
    j["perturbations"] = perturbations ? nlohmann::ordered_json(*perturbations) : nullptr;
    j["seed"] = seed;
    j["trials"] = trials ? nlohmann::ordered_json(*trials) : nullptr;
    j["max_windows"] = max_windows;
    j["normalize"] = normalize;
    j["skip_errors"] = skip_errors;
    j["pool_mode"] = pool_mode;
    j["sweep_axis"] = sweep_axis;
    j["sweep_values"] = sweep_values ? nlohmann::ordered_json(*sweep_values) : nullptr;
    j["failure_aggregator"] = failure_aggregator;
    j["robust_n"] = robust_n;
    j["combine"] = combine;
    j["valid_perturbations"] = valid_perturbations ? nlohmann::ordered_json(*valid_perturbations) : nullptr;
    j["baseline_mode"] = baseline_mode;
    j["fidelity_family"] = fidelity_family;
    j["fidelity_grid"] = fidelity_grid ? nlohmann::ordered_json(*fidelity_grid) : nullptr;
    j["fidelity_budget"] = fidelity_budget;
    return j;
}

PoolMode parse_pool_mode(const std::string& text) {
    if (text == "nested") return PoolMode::Nested;
    if (text == "independent") return PoolMode::Independent;
    throw ConfigError("pool_mode must be nested or independent, got '" + text + "'");
}

ConfigCombine parse_combine(const std::string& text) {
    if (text == "min") return ConfigCombine::MinAcrossConfigs;
    if (text == "mean") return ConfigCombine::MeanAcrossConfigs;
    throw ConfigError("combine must be min or mean, got '" + text + "'");
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg) {
    const json& p = cfg.backend_params;
    try {
        if (cfg.backend == "seasonal-ar") {
            SeasonalArConfig c;
            read_key(p, "ar", c.ar);
            read_key(p, "period", c.period);
            read_key(p, "beta", c.beta);
            read_key(p, "noise_scale", c.noise_scale);
            read_key(p, "max_context", c.max_context);
            return std::make_unique<SeasonalArBackend>(c);
        }
        if (cfg.backend == "two-point") {
            double rho = 0.3, lg = 0.5, lb = 2.0;
            read_key(p, "rho", rho);
            read_key(p, "loss_good", lg);
            read_key(p, "loss_bad", lb);
            return std::make_unique<TwoPointBackend>(TwoPointConfig::from_losses(rho, lg, lb));
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("backend_params: ") + e.what());
    }
    const std::string prefix = "external:";
    if (cfg.backend.rfind(prefix, 0) == 0) {
        auto argv = split_command(cfg.backend.substr(prefix.size()));
        if (argv.empty()) throw ConfigError("external backend needs a command");
        ExternalOptions opts;
        opts.processes = cfg.backend_procs;
        return std::make_unique<ExternalBackend>(std::move(argv), opts);
    }
    throw ConfigError("unknown backend '" + cfg.backend + "'");
}

SplitSpec parse_split(const std::string& text) {
    const std::string prefix = "frac:";
    if (text.rfind(prefix, 0) == 0) {
        const auto v = parse_double_list(text.substr(prefix.size()));
        if (v.size() != 2) throw ConfigError("split 'frac:' needs two fractions");
        return SplitSpec::fractions(v[0], v[1]);
    }
    return SplitSpec::preset(text);
}

TimeSeries synthetic_series(std::size_t length, std::uint64_t seed, std::size_t period) {
    if (length < 1 || period < 1) throw InvalidArgument("synthetic series needs length and period >= 1");
    Rng rng(derive_seed(seed, "synthetic", 0));
    std::vector<double> v(length);
    const double w = 2.0 * std::numbers::pi / static_cast<double>(period);
    for (std::size_t t = 0; t < length; ++t) {
        const double tt = static_cast<double>(t);
        v[t] = 10.0 + 0.002 * tt + 2.0 * std::sin(w * tt) + 0.7 * std::cos(2.0 * w * tt) + 0.3 * rng.normal();
    }
    return TimeSeries(Matrix::column(v), "synthetic", std::string("H"));
}

TimeSeries load_series(const RunConfig& cfg) {
    const std::string prefix = "synthetic";
    if (cfg.dataset == prefix || cfg.dataset.rfind(prefix + ":", 0) == 0) {
        std::size_t length = 2048;
        if (cfg.dataset.size() > prefix.size()) {
            try {
                length = parse_size(cfg.dataset.substr(prefix.size() + 1));
            } catch (const ConfigError&) {
                throw DatasetError("bad synthetic dataset spec '" + cfg.dataset + "'");
            }
        }
        return synthetic_series(length, cfg.seed);
    }
    return load_dataset(cfg.dataset, cfg.target, parse_split(cfg.split));
}

}  // namespace divscale
