#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "divscale/backend.hpp"
#include "divscale/rng.hpp"

using namespace divscale;

namespace {

Matrix seasonal_context(std::size_t n) {
    Rng rng(1);
    Matrix m(n, 1);
    for (std::size_t t = 0; t < n; ++t)
        m(t, 0) = 5 + std::sin(2 * std::numbers::pi * static_cast<double>(t) / 24.0) + 0.2 * rng.normal();
    return m;
}

ForecastRequest request(double temperature, std::size_t n, std::uint64_t seed = 7) {
    ForecastRequest r;
    r.context = seasonal_context(96);
    r.horizon = 12;
    r.num_samples = n;
    r.temperature = temperature;
    r.seed = seed;
    return r;
}

// Sample std across candidates at each step, averaged over the horizon.
double spread(const CandidatePool& pool) {
    double acc = 0;
    for (std::size_t h = 0; h < pool.horizon(); ++h) {
        std::vector<double> col;
        for (const auto& f : pool.candidates()) col.push_back(f.values(h, 0));
        acc += sample_std(col);
    }
    return acc / static_cast<double>(pool.horizon());
}

}  // namespace

TEST(SeasonalAr, ZeroTemperatureCollapses) {
    const SeasonalArBackend b;
    const auto pool = b.forecast(request(0.0, 8));
    ASSERT_EQ(pool.size(), 8u);
    for (std::size_t i = 1; i < pool.size(); ++i) EXPECT_EQ(pool[i], pool[0]);
}

TEST(SeasonalAr, SpreadIsLinearInTemperature) {
    const SeasonalArBackend b;
    const double base = spread(b.forecast(request(0.1, 32)));
    ASSERT_GT(base, 0.0);
    for (double tau : {0.2, 0.5, 1.0}) EXPECT_NEAR(spread(b.forecast(request(tau, 32))) / base, tau / 0.1, 1e-9);
}

TEST(SeasonalAr, CandidateOffsetSelectsStream) {
    const SeasonalArBackend b;
    const auto full = b.forecast(request(0.7, 5));
    for (std::size_t i = 0; i < 5; ++i) {
        auto r = request(0.7, 1);
        r.candidate_offset = i;
        const auto one = b.forecast(r);
        EXPECT_EQ(one[0], full[i]);
        EXPECT_EQ(one.provenance()[0].candidate_seed, candidate_seed(7, i));
    }
}

TEST(SeasonalAr, DescriptorAndValidation) {
    const SeasonalArBackend b(SeasonalArConfig{.max_context = 64});
    EXPECT_TRUE(b.descriptor().supports_temperature);
    EXPECT_FALSE(b.descriptor().supports_top_p);
    EXPECT_THROW(b.forecast(request(0.5, 1)), CapabilityError);
    auto r = request(0.5, 1);
    r.context = seasonal_context(64);
    r.num_samples = 0;
    EXPECT_THROW(b.forecast(r), InvalidArgument);
    r.num_samples = 1;
    r.temperature = -1;
    EXPECT_THROW(b.forecast(r), InvalidArgument);
    r.temperature = 0.5;
    r.top_p = 0.0;
    EXPECT_THROW(b.forecast(r), InvalidArgument);
}

TEST(SeasonalAr, ReconstructionShapeAndDeterminism) {
    const SeasonalArBackend b;
    const TimeSeries x(seasonal_context(96), "x", "H");
    const auto a = b.reconstruct(x, 0.5, 3);
    EXPECT_EQ(a.length(), 96u);
    EXPECT_EQ(a, b.reconstruct(x, 0.5, 3));
    EXPECT_NE(a, b.reconstruct(x, 0.5, 4));
    EXPECT_EQ(b.reconstruct(x, 0.0, 3), b.reconstruct(x, 0.0, 4));
}

TEST(TwoPoint, GoodFractionIsBinomial) {
    const TwoPointBackend b(TwoPointConfig::from_losses(0.3, 0.5, 2.0));
    ForecastRequest r;
    r.context = Matrix(4, 1);
    r.horizon = 3;
    r.num_samples = 20000;
    r.seed = 11;
    const auto pool = b.forecast(r);
    const Forecast zero(Matrix(3, 1));
    std::size_t good = 0;
    for (const auto& f : pool.candidates()) {
        const double l = mse(f, zero);
        EXPECT_TRUE(std::abs(l - 0.5) < 1e-12 || std::abs(l - 2.0) < 1e-12);
        good += std::abs(l - 0.5) < 1e-12;
    }
    const double n = 20000;
    EXPECT_NEAR(static_cast<double>(good), 0.3 * n, 4 * std::sqrt(n * 0.3 * 0.7));
}

TEST(TwoPoint, ExtremeRho) {
    ForecastRequest r;
    r.context = Matrix(1, 1);
    r.horizon = 1;
    r.num_samples = 50;
    const auto all_good = TwoPointBackend(TwoPointConfig::from_losses(1.0, 0.25, 4.0)).forecast(r);
    for (const auto& f : all_good.candidates()) EXPECT_DOUBLE_EQ(f.values(0, 0), 0.5);
    const auto all_bad = TwoPointBackend(TwoPointConfig::from_losses(0.0, 0.25, 4.0)).forecast(r);
    for (const auto& f : all_bad.candidates()) EXPECT_DOUBLE_EQ(f.values(0, 0), 2.0);
    EXPECT_THROW(TwoPointBackend(TwoPointConfig{.rho = 1.5}), InvalidArgument);
    EXPECT_THROW(TwoPointConfig::from_losses(0.3, -1, 1), InvalidArgument);
}

TEST(Seeds, CandidateSeedMatchesDerivation) {
    EXPECT_EQ(candidate_seed(0, 0), 0xf421b95e4d1df3ffULL);
    EXPECT_EQ(candidate_seed(0, 1), 0xe6fa84eb25c253daULL);
}
