#include "divscale/engine.hpp"

#include <algorithm>
#include <string>

namespace divscale {

void SamplingPlan::validate() const {
    if (backend == nullptr) throw InvalidArgument("sampling plan has no backend");
    if (n_max < 1) throw InvalidArgument("sampling budget must be >= 1");
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (mode == SamplingMode::Standard && perturbation) {
        throw InvalidArgument("standard sampling takes no perturbation");
    }
    if (mode == SamplingMode::Diversified) {
        if (!perturbation) throw InvalidArgument("diversified sampling needs a perturbation");
        perturbation->validate();
    }
}

namespace {

struct Scaling {
    std::vector<double> mu;
    std::vector<double> sd;
};

Scaling scaling_of(const Matrix& m) {
    Scaling s{channel_means(m), channel_stds(m)};
    for (double& v : s.sd)
        if (v == 0.0) v = 1.0;
    return s;
}

Matrix to_scaled(const Matrix& m, const Scaling& s) {
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = (m(r, c) - s.mu[c]) / s.sd[c];
    return out;
}

Forecast from_scaled(const Forecast& f, const Scaling& s) {
    Matrix out = f.values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * s.sd[c] + s.mu[c];
    return Forecast(std::move(out));
}

Matrix fit_context(const Matrix& m, std::size_t max_context) {
    return m.rows() > max_context ? m.tail_rows(max_context) : m;
}

CandidatePool generate_raw(const SamplingPlan& plan, const TimeSeries& context) {
    const Backend& backend = *plan.backend;
    const std::size_t max_ctx = backend.descriptor().max_context;
    const std::uint64_t base = plan.seeds.seed();

    ForecastRequest req;
    req.horizon = plan.horizon;
    req.temperature = plan.decode.temperature;
    req.top_p = plan.decode.top_p;
    req.seed = base;

    if (plan.mode == SamplingMode::Standard) {
        req.context = fit_context(context.values, max_ctx);
        req.num_samples = plan.n_max;
        return backend.forecast(req);
    }

    const PerturbationSpec& spec = *plan.perturbation;
    const std::string label = "perturb:" + (spec.seed_label.empty() ? spec.id() : spec.seed_label);
    CandidatePool pool;
    req.num_samples = 1;
    for (std::size_t i = 0; i < plan.n_max; ++i) {
        try {
            const auto pi = perturb(context, spec, derive_seed(plan.seeds, label, i), &backend);
            req.context = fit_context(pi.series.values, max_ctx);
            req.candidate_offset = i;
            CandidatePool one = backend.forecast(req);
            pool.add(one.candidates().front(),
                     Provenance{one.provenance().front().candidate_seed, spec.id(), pi.source_similarity});
        } catch (const Error&) {
            rethrow_with_context(std::current_exception(), "candidate " + std::to_string(i) + " (" + spec.label() + ")");
        }
    }
    return pool;
}

}  // namespace

CandidatePool generate_pool(const SamplingPlan& plan, const TimeSeries& context) {
    plan.validate();
    if (!plan.normalize) return generate_raw(plan, context);

    const Scaling s = scaling_of(context.values);
    const TimeSeries scaled(to_scaled(context.values, s), context.name, context.freq_hint, context.nan_masked);
    CandidatePool raw = generate_raw(plan, scaled);
    CandidatePool out;
    for (std::size_t i = 0; i < raw.size(); ++i) out.add(from_scaled(raw[i], s), raw.provenance()[i]);
    return out;
}

std::vector<std::size_t> normalize_budgets(std::vector<std::size_t> budgets, std::size_t n) {
    if (budgets.empty()) throw InvalidArgument("budget list is empty");
    std::sort(budgets.begin(), budgets.end());
    budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
    if (budgets.front() < 1) throw InvalidArgument("budgets must be >= 1");
    if (budgets.back() > n) {
        throw InvalidArgument("budget " + std::to_string(budgets.back()) + " exceeds pool size " + std::to_string(n));
    }
    return budgets;
}

std::map<std::size_t, ExactMatch> exact_match(const CandidatePool& pool, const Forecast& truth,
                                              std::vector<std::size_t> budgets) {
    budgets = normalize_budgets(std::move(budgets), pool.size());
    std::map<std::size_t, ExactMatch> out;
    ExactMatch best{mse(pool[0], truth), 0};
    std::size_t next = 0;
    for (std::size_t i = 0; i < budgets.back(); ++i) {
        if (i > 0) {
            const double loss = mse(pool[i], truth);
            if (loss < best.loss) best = {loss, i};
        }
        if (i + 1 == budgets[next]) {
            out.emplace(budgets[next], best);
            ++next;
        }
    }
    return out;
}

namespace {

Forecast median_of_prefix(const CandidatePool& pool, std::size_t n) {
    const std::size_t h = pool.horizon();
    const std::size_t d = pool.channels();
    Matrix out(h, d);
    std::vector<double> column(n);
    for (std::size_t e = 0; e < h * d; ++e) {
        for (std::size_t i = 0; i < n; ++i) column[i] = pool[i].values.flat()[e];
        std::sort(column.begin(), column.end());
        out.flat()[e] = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return Forecast(std::move(out));
}

}  // namespace

std::map<std::size_t, Forecast> majority_vote(const CandidatePool& pool, std::vector<std::size_t> budgets) {
    budgets = normalize_budgets(std::move(budgets), pool.size());
    std::map<std::size_t, Forecast> out;
    for (std::size_t n : budgets) out.emplace(n, median_of_prefix(pool, n));
    return out;
}

namespace {

void fill_budget(BudgetResult& r, const CandidatePool& pool, const Forecast& truth, std::size_t n,
                 const ExactMatch& em, Forecast mv) {
    r.budget = n;
    r.em_loss = em.loss;
    r.em_index = em.index;
    r.em_mae = mae(pool[em.index], truth);
    r.mv_loss = mse(mv, truth);
    r.mv_mae = mae(mv, truth);
    r.mv_forecast = std::move(mv);
}

double mean_similarity(const CandidatePool& pool) {
    KahanSum s;
    for (const auto& p : pool.provenance()) s.add(p.perturbed_input_similarity);
    return s.value() / static_cast<double>(pool.size());
}

}  // namespace

AggregateResult evaluate_window(const SamplingPlan& plan, const TimeSeries& context, const Forecast& truth,
                                std::vector<std::size_t> budgets) {
    if (truth.horizon() != plan.horizon) throw DimensionError("truth horizon differs from plan horizon");
    AggregateResult result;

    if (plan.pool_mode == PoolMode::Nested) {
        budgets = normalize_budgets(std::move(budgets), plan.n_max);
        SamplingPlan p = plan;
        p.n_max = budgets.back();
        const CandidatePool pool = generate_pool(p, context);
        if (pool.channels() != truth.channels()) throw DimensionError("forecast channels differ from truth channels");
        const auto em = exact_match(pool, truth, budgets);
        auto mv = majority_vote(pool, budgets);
        for (std::size_t n : budgets) {
            fill_budget(result.per_budget[n], pool, truth, n, em.at(n), std::move(mv.at(n)));
        }
        result.mean_similarity = mean_similarity(pool);
    } else {
        budgets = normalize_budgets(std::move(budgets), plan.n_max);
        for (std::size_t n : budgets) {
            SamplingPlan p = plan;
            p.n_max = n;
            p.seeds = plan.seeds.child("budget", n);
            const CandidatePool pool = generate_pool(p, context);
            if (pool.channels() != truth.channels()) throw DimensionError("forecast channels differ from truth channels");
            const auto em = exact_match(pool, truth, {n});
            auto mv = majority_vote(pool, {n});
            fill_budget(result.per_budget[n], pool, truth, n, em.at(n), std::move(mv.at(n)));
            if (n == budgets.back()) result.mean_similarity = mean_similarity(pool);
        }
    }
    result.budgets = std::move(budgets);
    return result;
}

std::vector<std::size_t> power_of_two_budgets(unsigned max_exponent) {
    std::vector<std::size_t> out;
    for (unsigned e = 0; e <= max_exponent; ++e) out.push_back(std::size_t{1} << e);
    return out;
}

}  // namespace divscale
