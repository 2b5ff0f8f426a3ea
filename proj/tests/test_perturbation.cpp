#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "divscale/backend.hpp"
#include "divscale/perturbation.hpp"
#include "divscale/rng.hpp"

using namespace divscale;

namespace {

TimeSeries random_series(std::uint64_t seed, std::size_t n = 96, std::size_t d = 1) {
    Rng rng(seed);
    Matrix m(n, d);
    for (std::size_t k = 0; k < d; ++k) {
        const double level = rng.uniform(-5, 5);
        const double amp = rng.uniform(0.5, 3);
        for (std::size_t t = 0; t < n; ++t) {
            const double w = 2.0 * std::numbers::pi * static_cast<double>(t) / 24.0;
            m(t, k) = level + amp * std::sin(w) + 0.01 * static_cast<double>(t) + 0.3 * rng.normal();
        }
    }
    return TimeSeries(m, "rand", "H");
}

double rel_change(std::span<const double> a, std::span<const double> b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(Ids, RoundTrip) {
    for (auto kind : all_perturbation_kinds()) EXPECT_EQ(parse_perturbation_kind(perturbation_id(kind)), kind);
    EXPECT_EQ(parse_perturbation_kind("none"), PerturbationKind::None);
    EXPECT_THROW(parse_perturbation_kind("shuffle"), InvalidArgument);
    EXPECT_EQ(all_perturbation_kinds().size(), 9u);
}

TEST(Identity, ZeroIntensityIsExact) {
    const auto x = random_series(1, 64, 2);
    EXPECT_EQ(gaussian_noise(x, 0.0, 5), x);
    EXPECT_EQ(missing_data(x, 0.0, 5), x);
    EXPECT_EQ(perturb(x, PerturbationSpec::defaults(PerturbationKind::None), 9).series, x);
    EXPECT_EQ(perturb(x, with_intensity(PerturbationSpec::defaults(PerturbationKind::Gaussian), 0.0), 9).series, x);
    EXPECT_EQ(perturb(x, with_intensity(PerturbationSpec::defaults(PerturbationKind::Prefix), 0.0), 9).series, x);
    EXPECT_EQ(random_offset(x, 3, OffsetMode::Continuous, 0.0), x);
}

TEST(Structural, LengthsAndPreservedSamples) {
    const auto x = random_series(2, 40, 2);
    const auto pre = prefix_pad(x, 5, 7.0);
    ASSERT_EQ(pre.length(), 45u);
    for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(pre.values(t, 1), 7.0);
    for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(pre.values(t + 5, 0), x.values(t, 0));

    const auto suf = suffix_pad(x, 3, std::vector<double>{1.0, 2.0});
    ASSERT_EQ(suf.length(), 43u);
    for (std::size_t t = 0; t < 40; ++t) EXPECT_EQ(suf.values(t, 1), x.values(t, 1));
    EXPECT_EQ(suf.values(42, 0), 1.0);
    EXPECT_EQ(suf.values(42, 1), 2.0);

    const auto ins = middle_insert(x, 4, 10);
    ASSERT_EQ(ins.length(), 44u);
    for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(ins.values(t, 0), x.values(t, 0));
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(ins.values(10 + j, 0), x.values(9, 0));
    for (std::size_t t = 10; t < 40; ++t) EXPECT_EQ(ins.values(t + 4, 0), x.values(t, 0));

    EXPECT_THROW(middle_insert(x, 4, 0), InvalidArgument);
    EXPECT_THROW(middle_insert(x, 4, 40), InvalidArgument);
    EXPECT_THROW(prefix_pad(x, 2, std::vector<double>{1.0}), DimensionError);
}

TEST(Structural, DrawnLengthStaysInRange) {
    const auto x = random_series(3, 64);
    for (auto kind : {PerturbationKind::Prefix, PerturbationKind::Suffix, PerturbationKind::Insertion}) {
        const auto spec = PerturbationSpec::defaults(kind);
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto len = perturb(x, spec, s).series.length();
            EXPECT_GE(len, 64u + 16u);
            EXPECT_LE(len, 64u + 32u);
        }
    }
}

TEST(Structural, SuffixKeepsOriginalAtFront) {
    const auto x = random_series(4, 50);
    const auto pi = perturb(x, PerturbationSpec::defaults(PerturbationKind::Suffix), 77);
    for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(pi.series.values(t, 0), x.values(t, 0));
}

TEST(Gaussian, NoiseMomentsMatchScaledStd) {
    // Constant-free residual check: (x' - x) / (eta * sd) should be N(0, 1).
    const auto x = random_series(5, 4000);
    const double eta = 0.2;
    const double sd = channel_stds(x.values)[0];
    const auto y = gaussian_noise(x, eta, 1234);
    KahanSum s, s2;
    for (std::size_t t = 0; t < x.length(); ++t) {
        const double z = (y.values(t, 0) - x.values(t, 0)) / (eta * sd);
        s.add(z);
        s2.add(z * z);
    }
    const double n = static_cast<double>(x.length());
    EXPECT_NEAR(s.value() / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2.value() / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Gaussian, SeedDeterminism) {
    const auto x = random_series(6);
    EXPECT_EQ(gaussian_noise(x, 0.1, 5), gaussian_noise(x, 0.1, 5));
    EXPECT_NE(gaussian_noise(x, 0.1, 5), gaussian_noise(x, 0.1, 6));
}

TEST(Offset, ConstantShiftWithinBound) {
    const auto x = random_series(7, 64, 3);
    const auto sd = channel_stds(x.values);
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto y = random_offset(x, s, OffsetMode::Continuous, 1.0);
        for (std::size_t k = 0; k < 3; ++k) {
            const double c = y.values(0, k) - x.values(0, k);
            EXPECT_LE(std::abs(c), sd[k]);
            for (std::size_t t = 1; t < 64; ++t) EXPECT_NEAR(y.values(t, k) - x.values(t, k), c, 1e-12);
        }
        const auto z = random_offset(x, s, OffsetMode::Discrete, 2.0);
        for (std::size_t k = 0; k < 3; ++k)
            EXPECT_NEAR(std::abs(z.values(5, k) - x.values(5, k)), 2.0 * sd[k], 1e-12);
    }
}

TEST(Missing, MaskCountIsBinomial) {
    Matrix m(5000, 1, 1.0);
    const TimeSeries x(m);
    const double p = 0.1;
    const auto y = missing_data(x, p, 99);
    std::size_t masked = 0;
    for (double v : y.values.flat()) masked += v == 0.0;
    const double n = 5000.0;
    EXPECT_NEAR(static_cast<double>(masked), n * p, 4.0 * std::sqrt(n * p * (1 - p)));

    const auto z = missing_data(x, p, 99, MissingSentinel::NaN);
    EXPECT_TRUE(z.nan_masked);
    std::size_t nan = 0;
    for (double v : z.values.flat()) nan += std::isnan(v);
    EXPECT_EQ(nan, masked);
    EXPECT_THROW(missing_data(x, 1.0, 1), InvalidArgument);
}

TEST(Structure, DirectionContracts) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto x = random_series(seed + 1000, 96);
        const auto ch = x.values.channel(0);
        for (const auto& f : {sensitivity_field(ch, 24), dependency_field(ch, 24, 5)}) {
            EXPECT_NEAR(mean(f.centered), 0.0, 1e-9);
            for (std::size_t i = 0; i < ch.size(); ++i) {
                const double want = ch[i] + kStructureEpsilon > 0 ? 1.0 : -1.0;
                if (f.signed_field[i] != 0.0) EXPECT_EQ(std::signbit(f.signed_field[i]), want < 0);
                EXPECT_EQ(std::abs(f.signed_field[i]), std::abs(f.magnitude[i]));
            }
        }
        const double eta = 0.01 + 0.04 * static_cast<double>(seed % 5) / 4.0;
        for (const auto& y : {task_sensitivity(x, eta, 24), task_dependency(x, eta, 24, 5)}) {
            const double r = rel_change(ch, y.values.channel(0));
            EXPECT_GE(r, 0.99 * eta);
            EXPECT_LE(r, eta * (1 + 1e-12));
        }
    }
}

TEST(Structure, ApplyDirectionScalesToEta) {
    const std::vector<double> x{3, 4};
    const std::vector<double> f{1, 0};
    const auto y = apply_direction(x, f, 0.2);
    EXPECT_NEAR(y[0], 3 + 0.2 * 5 / (1 + kStructureEpsilon), 1e-12);
    EXPECT_EQ(y[1], 4.0);
    EXPECT_THROW(apply_direction(x, std::vector<double>{1}, 0.1), DimensionError);
}

TEST(Structure, ShortContextIsInsufficient) {
    const auto x = random_series(8, 40);
    EXPECT_THROW(task_sensitivity(x, 0.02, 24), InsufficientLength);
}

TEST(Reconstruction, NeedsBackendAndCapability) {
    const auto x = random_series(9, 96);
    const auto spec = PerturbationSpec::defaults(PerturbationKind::Reconstruction);
    EXPECT_THROW(perturb(x, spec, 1), CapabilityError);
    const TwoPointBackend two(TwoPointConfig{});
    EXPECT_THROW(perturb(x, spec, 1, &two), CapabilityError);
    const SeasonalArBackend ar;
    const auto pi = perturb(x, spec, 1, &ar);
    EXPECT_EQ(pi.series.length(), x.length());
    EXPECT_GT(pi.source_similarity, 0.9);
}

TEST(Similarity, EndAlignedOverlap) {
    const auto x = TimeSeries::univariate(std::vector<double>{1, 2, 3});
    const auto padded = prefix_pad(x, 10, -100.0);
    // Only the last three rows are compared.
    EXPECT_NEAR(aligned_similarity(x, padded), 1.0, 1e-15);
    const auto pi = perturb(x, with_intensity(PerturbationSpec::defaults(PerturbationKind::Prefix), 5), 1);
    EXPECT_NEAR(pi.source_similarity, 1.0, 1e-15);
}

TEST(FidelityGate, Boundaries) {
    PerturbedInput pi;
    pi.source_similarity = 0.9;
    EXPECT_TRUE(fidelity_gate(pi, 0.9));
    EXPECT_FALSE(fidelity_gate(pi, std::nextafter(0.9, 1.0)));
    EXPECT_TRUE(fidelity_gate(pi, 0.5));
    EXPECT_THROW(fidelity_gate(pi, 0.0), InvalidArgument);
    EXPECT_THROW(fidelity_gate(pi, 1.01), InvalidArgument);
    pi.source_similarity = 1.0;
    EXPECT_TRUE(fidelity_gate(pi, 1.0));
}

TEST(Spec, ValidateRejectsBadParameters) {
    auto s = PerturbationSpec::defaults(PerturbationKind::Gaussian);
    s.eta = {0.2, 0.1};
    EXPECT_THROW(s.validate(), InvalidArgument);
    auto d = PerturbationSpec::defaults(PerturbationKind::Dependency);
    d.window = 4;
    EXPECT_THROW(d.validate(), InvalidArgument);
    auto m = PerturbationSpec::defaults(PerturbationKind::Missing);
    m.mask_rate = 1.0;
    EXPECT_THROW(m.validate(), InvalidArgument);
    EXPECT_EQ(PerturbationSpec::defaults(PerturbationKind::Sensitivity).eta, (Range{0.01, 0.05}));
    EXPECT_EQ(with_intensity(PerturbationSpec::defaults(PerturbationKind::Gaussian), 0.3).label(), "gaussian[eta=0.3]");
}

TEST(Perturb, PureInSeed) {
    const auto x = random_series(10, 96);
    for (auto kind : all_perturbation_kinds()) {
        if (kind == PerturbationKind::Reconstruction) continue;
        const auto spec = PerturbationSpec::defaults(kind);
        EXPECT_EQ(perturb(x, spec, 42).series, perturb(x, spec, 42).series) << perturbation_id(kind);
    }
}
