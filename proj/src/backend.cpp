#include "divscale/backend.hpp"

#include <cmath>

#include "divscale/decomposition.hpp"
#include "divscale/log.hpp"
#include "divscale/rng.hpp"

namespace divscale {

std::uint64_t candidate_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return derive_seed(seed, "cand", index);
}

CandidatePool Backend::forecast(const ForecastRequest& req) const {
    const auto& d = descriptor();
    if (req.horizon < 1) throw InvalidArgument("forecast horizon must be >= 1");
    if (req.num_samples < 1) throw InvalidArgument("num_samples must be >= 1");
    if (!(req.temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    if (!(req.top_p > 0.0 && req.top_p <= 1.0)) throw InvalidArgument("top_p must be in (0, 1]");
    if (req.context.rows() < 1 || req.context.cols() < 1) throw InvalidArgument("empty context");
    if (req.context.rows() > d.max_context) {
        throw CapabilityError("context length " + std::to_string(req.context.rows()) +
                              " exceeds max_context " + std::to_string(d.max_context) + " of " + d.name);
    }
    if (!d.supports_temperature && req.temperature > 0.0) {
        std::call_once(temperature_warning_, [&] {
            log::warn(d.name + " does not support temperature; ignoring it");
        });
    }
    if (!d.supports_top_p && req.top_p < 1.0) {
        std::call_once(top_p_warning_, [&] {
            log::warn(d.name + " does not support top_p; ignoring it");
        });
    }
    CandidatePool pool = do_forecast(req);
    if (pool.size() != req.num_samples) {
        throw BackendError(d.name + " returned " + std::to_string(pool.size()) + " samples, expected " +
                           std::to_string(req.num_samples));
    }
    if (pool.horizon() != req.horizon) {
        throw BackendError(d.name + " returned horizon " + std::to_string(pool.horizon()) +
                           ", expected " + std::to_string(req.horizon));
    }
    for (const auto& c : pool.candidates()) {
        if (!c.values.all_finite()) throw BackendError(d.name + " produced non-finite forecast values");
    }
    return pool;
}

TimeSeries Backend::reconstruct(const TimeSeries& context, double temperature, std::uint64_t seed) const {
    const auto& d = descriptor();
    if (!d.supports_reconstruction) {
        throw CapabilityError(d.name + " does not support reconstruction");
    }
    if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
    Matrix out = do_reconstruct(context.values, temperature, seed);
    if (out.rows() != context.length() || out.cols() != context.channels()) {
        throw BackendError(d.name + " reconstruction changed the context shape");
    }
    if (!out.all_finite()) throw BackendError(d.name + " produced a non-finite reconstruction");
    return TimeSeries(std::move(out), context.name, context.freq_hint);
}

Matrix Backend::do_reconstruct(const Matrix&, double, std::uint64_t) const {
    throw CapabilityError(descriptor().name + " does not support reconstruction");
}

// ---------------------------------------------------------------------------

namespace {

struct ChannelModel {
    double mu = 0.0;
    double sigma = 1.0;
    std::vector<double> profile;  // empty when no seasonal term
    std::vector<double> deviations;  // y_t over the context
};

ChannelModel fit_channel(std::span<const double> x, const SeasonalArConfig& cfg) {
    ChannelModel m;
    m.mu = mean(x);
    const double sd = sample_std(x);
    m.sigma = sd > 0.0 ? sd : 1.0;
    if (cfg.period >= 2 && x.size() >= 2 * cfg.period) {
        const auto dec = stl_decompose(x, cfg.period);
        m.profile.assign(dec.seasonal.begin(), dec.seasonal.begin() + static_cast<std::ptrdiff_t>(cfg.period));
    }
    m.deviations.resize(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double s = m.profile.empty() ? 0.0 : m.profile[t % cfg.period];
        m.deviations[t] = x[t] - m.mu - cfg.beta * s;
    }
    return m;
}

double season_at(const ChannelModel& m, const SeasonalArConfig& cfg, std::size_t t) {
    return m.profile.empty() ? 0.0 : cfg.beta * m.profile[t % cfg.period];
}

}  // namespace

SeasonalArBackend::SeasonalArBackend(SeasonalArConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.noise_scale < 0.0) throw InvalidArgument("SeasonalAR noise_scale must be >= 0");
    if (cfg_.max_context < 1) throw InvalidArgument("max_context must be >= 1");
    if (cfg_.d_out < 1) throw InvalidArgument("d_out must be >= 1");
    desc_.name = "seasonal-ar";
    desc_.supports_temperature = true;
    desc_.supports_top_p = false;
    desc_.supports_reconstruction = true;
    desc_.max_context = cfg_.max_context;
    desc_.d_out = cfg_.d_out;
}

CandidatePool SeasonalArBackend::do_forecast(const ForecastRequest& req) const {
    const std::size_t len = req.context.rows();
    const std::size_t d_out = std::min(req.context.cols(), cfg_.d_out);
    const std::size_t order = cfg_.ar.size();

    std::vector<ChannelModel> models;
    models.reserve(d_out);
    for (std::size_t c = 0; c < d_out; ++c) models.push_back(fit_channel(req.context.channel(c), cfg_));

    CandidatePool pool;
    std::vector<double> history;
    for (std::size_t i = 0; i < req.num_samples; ++i) {
        const std::uint64_t seed = candidate_seed(req.seed, req.candidate_offset + i);
        Rng rng(seed);
        Matrix out(req.horizon, d_out);
        for (std::size_t c = 0; c < d_out; ++c) {
            const auto& m = models[c];
            const double innovation = req.temperature * cfg_.noise_scale * m.sigma;
            history = m.deviations;
            history.reserve(len + req.horizon);
            for (std::size_t h = 0; h < req.horizon; ++h) {
                const std::size_t t = len + h;
                double y = 0.0;
                for (std::size_t k = 0; k < order && k < t; ++k) y += cfg_.ar[k] * history[t - 1 - k];
                y += innovation * rng.normal();
                history.push_back(y);
                out(h, c) = m.mu + season_at(m, cfg_, t) + y;
            }
        }
        pool.add(Forecast(std::move(out)), Provenance{seed, "none", 1.0});
    }
    return pool;
}

Matrix SeasonalArBackend::do_reconstruct(const Matrix& context, double temperature, std::uint64_t seed) const {
    const std::size_t len = context.rows();
    const std::size_t order = cfg_.ar.size();
    Rng rng(candidate_seed(seed, 0));
    Matrix out(len, context.cols());
    for (std::size_t c = 0; c < context.cols(); ++c) {
        const auto x = context.channel(c);
        const auto m = fit_channel(x, cfg_);
        const double innovation = temperature * cfg_.noise_scale * m.sigma;
        for (std::size_t t = 0; t < len; ++t) {
            double fit;
            if (t < order) {
                fit = x[t];
            } else {
                double y = 0.0;
                for (std::size_t k = 0; k < order; ++k) y += cfg_.ar[k] * m.deviations[t - 1 - k];
                fit = m.mu + season_at(m, cfg_, t) + y;
            }
            out(t, c) = fit + innovation * rng.normal();
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

TwoPointConfig TwoPointConfig::from_losses(double rho, double loss_good, double loss_bad) {
    if (loss_good < 0.0 || loss_bad < 0.0) throw InvalidArgument("two-point losses must be >= 0");
    TwoPointConfig cfg;
    cfg.rho = rho;
    cfg.good_value = std::sqrt(loss_good);
    cfg.bad_value = std::sqrt(loss_bad);
    return cfg;
}

TwoPointBackend::TwoPointBackend(TwoPointConfig cfg) : cfg_(cfg) {
    if (!(cfg_.rho >= 0.0 && cfg_.rho <= 1.0)) throw InvalidArgument("two-point rho must be in [0, 1]");
    if (!std::isfinite(cfg_.good_value) || !std::isfinite(cfg_.bad_value)) {
        throw InvalidArgument("two-point values must be finite");
    }
    desc_.name = "two-point";
    desc_.supports_temperature = false;
    desc_.supports_top_p = false;
    desc_.supports_reconstruction = false;
    desc_.max_context = cfg_.max_context;
    desc_.d_out = cfg_.d_out;
}

CandidatePool TwoPointBackend::do_forecast(const ForecastRequest& req) const {
    const std::size_t d_out = std::min(req.context.cols(), cfg_.d_out);
    CandidatePool pool;
    for (std::size_t i = 0; i < req.num_samples; ++i) {
        const std::uint64_t seed = candidate_seed(req.seed, req.candidate_offset + i);
        Rng rng(seed);
        const bool good = rng.uniform() < cfg_.rho;
        pool.add(Forecast(Matrix(req.horizon, d_out, good ? cfg_.good_value : cfg_.bad_value)),
                 Provenance{seed, "none", 1.0});
    }
    return pool;
}

}  // namespace divscale
