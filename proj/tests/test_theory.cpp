#include <gtest/gtest.h>

#include <cmath>

#include "divscale/error.hpp"
#include "divscale/theory.hpp"

using namespace divscale;

namespace {

const TheoryParams kReference{.rho = 0.3, .loss_good = 0.5, .loss_bad = 2.0, .loss_0 = 1.0};

}  // namespace

TEST(Threshold, ReferenceValue) {
    EXPECT_NEAR(critical_threshold(kReference), std::log(3.0) / std::log(10.0 / 7.0), 1e-12);
    EXPECT_NEAR(critical_threshold(kReference), 3.0799, 1e-3);
}

TEST(Threshold, DegenerateCases) {
    auto p = kReference;
    p.loss_bad = p.loss_0;
    EXPECT_EQ(critical_threshold(p), 0.0);
    p = kReference;
    p.rho = 0.9;
    EXPECT_NEAR(critical_threshold(p), std::log(3.0) / std::log(10.0), 1e-12);
    p.rho = 1.0 - 1e-12;
    EXPECT_LT(critical_threshold(p), 0.05);
}

TEST(Threshold, InvalidParameters) {
    auto p = kReference;
    p.rho = 0.0;
    EXPECT_THROW(critical_threshold(p), InvalidArgument);
    p = kReference;
    p.loss_0 = 0.5;
    EXPECT_THROW(critical_threshold(p), InvalidArgument);
    p = kReference;
    p.loss_0 = 2.5;
    EXPECT_THROW(critical_threshold(p), InvalidArgument);
}

TEST(ExpectedMin, ClosedForm) {
    EXPECT_NEAR(expected_min_em(kReference, 4), 0.860150, 1e-12);
    EXPECT_NEAR(expected_min_em(kReference, 1), 0.3 * 0.5 + 0.7 * 2.0, 1e-15);
    // The sign of E[min] - L0 flips exactly between floor(N*) and floor(N*) + 1.
    EXPECT_GT(expected_min_em(kReference, 3), kReference.loss_0);
    EXPECT_LT(expected_min_em(kReference, 4), kReference.loss_0);
    EXPECT_THROW(expected_min_em(kReference, 0), InvalidArgument);
}

TEST(MonteCarlo, AgreesWithClosedForm) {
    const auto est = mc_expected_min(kReference, 4, 100000, 9);
    EXPECT_LE(std::abs(est.mean - 0.860150), 3 * est.std_err);
    EXPECT_GT(est.std_err, 0.0);
}

TEST(MonteCarlo, IndependentOfJobs) {
    const auto a = mc_expected_min(kReference, 5, 50000, 3, 1);
    const auto b = mc_expected_min(kReference, 5, 50000, 3, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_err, b.std_err);
}

TEST(Crossover, ReferenceAndTrivialCases) {
    EXPECT_EQ(empirical_crossover(kReference, 100000, 1), 4u);
    auto p = kReference;
    p.loss_bad = p.loss_0;
    EXPECT_EQ(empirical_crossover(p, 100000, 1), 1u);
    p = kReference;
    p.rho = 0.9;
    EXPECT_EQ(empirical_crossover(p, 100000, 1), 1u);
}

TEST(Support, ExpansionDemo) {
    const std::vector<double> s{0.5, 1.0};
    const std::vector<double> d{0.2, 0.5, 1.0};
    const auto r = support_expansion_demo(s, d);
    EXPECT_EQ(r.lim_std, 0.5);
    EXPECT_EQ(r.lim_div, 0.2);
    EXPECT_TRUE(r.strict);
    EXPECT_FALSE(support_expansion_demo(s, s).strict);
    EXPECT_THROW(support_expansion_demo(d, s), AssumptionError);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        EXPECT_EQ(mc_support_minimum(s, 1024, seed), 0.5);
        EXPECT_EQ(mc_support_minimum(d, 1024, seed), 0.2);
    }
}
