#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "divscale/decomposition.hpp"
#include "divscale/error.hpp"
#include "divscale/rng.hpp"

using namespace divscale;

namespace {

// Least-squares projection of the interior onto a single-period sinusoid
// basis; independent of the moving-average machinery.
std::pair<double, double> fourier_coeffs(const std::vector<double>& s, std::size_t period, std::size_t lo,
                                         std::size_t hi) {
    double a = 0, b = 0, n = 0;
    for (std::size_t t = lo; t < hi; ++t) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(period);
        a += s[t] * std::sin(w);
        b += s[t] * std::cos(w);
        n += 1;
    }
    return {2 * a / n, 2 * b / n};
}

std::vector<double> series(std::size_t n, std::size_t period, double slope, double amp, double noise,
                           std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(period);
        x[t] = 3.0 + slope * static_cast<double>(t) + amp * std::sin(w) + noise * rng.normal();
    }
    return x;
}

}  // namespace

TEST(Decompose, RecoversTrendAndSeasonOnCleanSignal) {
    for (std::size_t period : {7u, 12u, 24u}) {
        const std::size_t n = 10 * period;
        const auto x = series(n, period, 0.05, 2.0, 0.0, 0);
        const auto d = stl_decompose(x, period);
        ASSERT_EQ(d.trend.size(), n);
        EXPECT_EQ(d.period, period);
        const std::size_t half = period / 2;
        for (std::size_t t = half; t + half < n; ++t) {
            EXPECT_NEAR(d.trend[t], 3.0 + 0.05 * static_cast<double>(t), 1e-9) << "t=" << t;
            EXPECT_NEAR(d.residual[t], 0.0, 1e-9);
        }
        const auto [sa, cb] = fourier_coeffs(d.seasonal, period, 0, n);
        EXPECT_NEAR(sa, 2.0, 1e-9);
        EXPECT_NEAR(cb, 0.0, 1e-9);
    }
}

TEST(Decompose, PureRampHasNoSeason) {
    std::vector<double> x(60);
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = 0.5 * static_cast<double>(t);
    const auto d = stl_decompose(x, 12);
    for (double s : d.seasonal) EXPECT_NEAR(s, 0.0, 1e-12);
    // Ends are held at the nearest defined trend value.
    EXPECT_DOUBLE_EQ(d.trend[0], d.trend[6]);
    EXPECT_DOUBLE_EQ(d.trend[59], d.trend[53]);
}

TEST(Decompose, PartsAddBackAndSeasonIsPeriodicWithZeroMean) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t period = 2 + static_cast<std::size_t>(rng.uniform_int(0, 30));
        const std::size_t n = 2 * period + static_cast<std::size_t>(rng.uniform_int(0, 200));
        const auto x = series(n, period, rng.uniform(-1, 1), rng.uniform(0, 5), rng.uniform(0, 2), seed + 100);
        const auto d = stl_decompose(x, period);
        double season_mean = 0;
        for (std::size_t t = 0; t < n; ++t) {
            EXPECT_NEAR(d.trend[t] + d.seasonal[t] + d.residual[t], x[t], 1e-9);
            if (t + period < n) EXPECT_DOUBLE_EQ(d.seasonal[t], d.seasonal[t + period]);
        }
        for (std::size_t k = 0; k < period; ++k) season_mean += d.seasonal[k];
        EXPECT_NEAR(season_mean / static_cast<double>(period), 0.0, 1e-9);
    }
}

TEST(Decompose, RejectsShortInputAndBadPeriod) {
    const std::vector<double> x(47, 1.0);
    EXPECT_THROW(stl_decompose(x, 24), InsufficientLength);
    EXPECT_NO_THROW(stl_decompose(std::vector<double>(48, 1.0), 24));
    EXPECT_THROW(stl_decompose(x, 1), InvalidArgument);
}

TEST(Gradient, Examples) {
    EXPECT_EQ(gradient(std::vector<double>{1, 2, 4, 7}), (std::vector<double>{1, 1.5, 2.5, 3}));
    EXPECT_EQ(gradient(std::vector<double>{3, 1}), (std::vector<double>{-2, -2}));
    EXPECT_THROW(gradient(std::vector<double>{1}), InvalidArgument);
}

TEST(Roll, Examples) {
    const std::vector<double> x{1, 2, 3, 4};
    EXPECT_EQ(roll(x, 1), (std::vector<double>{4, 1, 2, 3}));
    EXPECT_EQ(roll(x, -1), (std::vector<double>{2, 3, 4, 1}));
    EXPECT_EQ(roll(x, 4), x);
    EXPECT_EQ(roll(x, 9), roll(x, 1));
}

TEST(LocalStd, Examples) {
    const auto s = local_std(std::vector<double>{0, 2, 0, 2}, 3);
    EXPECT_NEAR(s[0], 1.0, 1e-15);
    EXPECT_NEAR(s[1], std::sqrt(8.0 / 9.0), 1e-15);
    EXPECT_NEAR(s[2], std::sqrt(8.0 / 9.0), 1e-15);
    EXPECT_NEAR(s[3], 1.0, 1e-15);
    for (double v : local_std(std::vector<double>{5, 5, 5}, 1)) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(local_std(std::vector<double>{1, 2, 3}, 2), InvalidArgument);
    EXPECT_THROW(local_std(std::vector<double>{1, 2, 3}, 5), InvalidArgument);
}

TEST(Period, FromFrequencyHint) {
    EXPECT_EQ(default_period("H"), 24u);
    EXPECT_EQ(default_period("15min"), 96u);
    EXPECT_EQ(default_period("15T"), 96u);
    EXPECT_EQ(default_period(std::nullopt), 24u);
}
