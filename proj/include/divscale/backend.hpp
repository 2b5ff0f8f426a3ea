#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "divscale/core.hpp"

namespace divscale {

/// What a forecaster can do. Decoding knobs a backend does not support are
/// ignored with a warning rather than rejected.
struct BackendDescriptor {
    std::string name;
    bool supports_temperature = false;
    bool supports_top_p = false;
    bool supports_reconstruction = false;
    std::size_t max_context = 1;
    std::size_t d_out = 1;

    friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

struct ForecastRequest {
    Matrix context;
    std::size_t horizon = 1;
    std::size_t num_samples = 1;
    double temperature = 0.0;
    double top_p = 1.0;
    std::uint64_t seed = 0;
    // Candidate j of the response is drawn from derive_seed(seed, "cand", candidate_offset + j).
    // Lets the engine request candidates one at a time without changing their streams.
    // Not part of the wire protocol.
    std::uint64_t candidate_offset = 0;
};

/// Uniform forecaster interface.
///
/// `forecast` validates the request against the descriptor and then calls the
/// implementation. Implementations must be safe to call concurrently.
class Backend {
public:
    virtual ~Backend() = default;

    virtual const BackendDescriptor& descriptor() const = 0;

    CandidatePool forecast(const ForecastRequest& req) const;

    // Same-length stochastic reconstruction of `context`. Temperature 0 gives
    // the backend's deterministic fit.
    TimeSeries reconstruct(const TimeSeries& context, double temperature, std::uint64_t seed) const;

protected:
    virtual CandidatePool do_forecast(const ForecastRequest& req) const = 0;
    virtual Matrix do_reconstruct(const Matrix& context, double temperature, std::uint64_t seed) const;

private:
    mutable std::once_flag temperature_warning_;
    mutable std::once_flag top_p_warning_;
};

// Seed of candidate `index` for a request with base seed `seed`.
std::uint64_t candidate_seed(std::uint64_t seed, std::uint64_t index) noexcept;

struct SeasonalArConfig {
    std::vector<double> ar{0.6, 0.2};
    std::size_t period = 24;
    // Weight on the seasonal profile estimated from the context.
    double beta = 1.0;
    // Innovation std is temperature * noise_scale * std(context channel).
    double noise_scale = 0.5;
    std::size_t max_context = 4096;
    std::size_t d_out = 1;
};

/// Seasonal autoregressive synthetic forecaster.
///
/// Per channel, with mu and sigma the context mean and std and s(t) the
/// seasonal profile of the context (zero when the context is shorter than
/// two periods):
///
///   y_t = x_t - mu - beta * s(t)
///   y_t = sum_k a_k y_{t-k} + temperature * noise_scale * sigma * xi_t
///
/// Forecasts replay the recursion past the end of the context with fresh
/// noise, so temperature 0 yields the closed-form mean path and the spread
/// across candidates is exactly linear in temperature.
class SeasonalArBackend final : public Backend {
public:
    explicit SeasonalArBackend(SeasonalArConfig cfg = {});

    const BackendDescriptor& descriptor() const override { return desc_; }
    const SeasonalArConfig& config() const noexcept { return cfg_; }

protected:
    CandidatePool do_forecast(const ForecastRequest& req) const override;
    Matrix do_reconstruct(const Matrix& context, double temperature, std::uint64_t seed) const override;

private:
    SeasonalArConfig cfg_;
    BackendDescriptor desc_;
};

struct TwoPointConfig {
    double rho = 0.3;
    // Every element of a "good" candidate equals good_value, likewise for bad.
    double good_value = 0.0;
    double bad_value = 1.0;
    std::size_t max_context = 1 << 20;
    std::size_t d_out = 1;

    // Values that give MSE loss_good / loss_bad against an all-zero truth.
    static TwoPointConfig from_losses(double rho, double loss_good, double loss_bad);
};

/// Two-point loss model: each candidate is the "good" constant forecast with
/// probability rho and the "bad" one otherwise. Ignores the context.
class TwoPointBackend final : public Backend {
public:
    explicit TwoPointBackend(TwoPointConfig cfg);

    const BackendDescriptor& descriptor() const override { return desc_; }
    const TwoPointConfig& config() const noexcept { return cfg_; }

protected:
    CandidatePool do_forecast(const ForecastRequest& req) const override;

private:
    TwoPointConfig cfg_;
    BackendDescriptor desc_;
};

}  // namespace divscale
