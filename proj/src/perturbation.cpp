#include "divscale/perturbation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "divscale/backend.hpp"
#include "divscale/decomposition.hpp"
#include "divscale/rng.hpp"

namespace divscale {

namespace {

struct KindName {
    PerturbationKind kind;
    std::string_view id;
};

constexpr std::array<KindName, 10> kKindNames{{
    {PerturbationKind::None, "none"},
    {PerturbationKind::Prefix, "prefix"},
    {PerturbationKind::Suffix, "suffix"},
    {PerturbationKind::Insertion, "insertion"},
    {PerturbationKind::Gaussian, "gaussian"},
    {PerturbationKind::RandomOffset, "random"},
    {PerturbationKind::Missing, "missing"},
    {PerturbationKind::Sensitivity, "sensitivity"},
    {PerturbationKind::Dependency, "dependency"},
    {PerturbationKind::Reconstruction, "reconstruction"},
}};

}  // namespace

std::string_view perturbation_id(PerturbationKind kind) noexcept {
    for (const auto& kn : kKindNames)
        if (kn.kind == kind) return kn.id;
    return "none";
}

PerturbationKind parse_perturbation_kind(std::string_view id) {
    for (const auto& kn : kKindNames)
        if (kn.id == id) return kn.kind;
    if (id == "insert") return PerturbationKind::Insertion;
    throw InvalidArgument("unknown perturbation id '" + std::string(id) + "'");
}

const std::vector<PerturbationKind>& all_perturbation_kinds() {
    static const std::vector<PerturbationKind> kinds = [] {
        std::vector<PerturbationKind> out;
        for (const auto& kn : kKindNames)
            if (kn.kind != PerturbationKind::None) out.push_back(kn.kind);
        return out;
    }();
    return kinds;
}

bool is_structural(PerturbationKind kind) noexcept {
    return kind == PerturbationKind::Prefix || kind == PerturbationKind::Suffix ||
           kind == PerturbationKind::Insertion;
}

bool is_task_specific(PerturbationKind kind) noexcept {
    return kind == PerturbationKind::Sensitivity || kind == PerturbationKind::Dependency ||
           kind == PerturbationKind::Reconstruction;
}

PerturbationSpec PerturbationSpec::defaults(PerturbationKind kind) {
    PerturbationSpec s;
    s.kind = kind;
    if (kind == PerturbationKind::Sensitivity || kind == PerturbationKind::Dependency) {
        s.eta = {0.01, 0.05};
    }
    return s;
}

std::string PerturbationSpec::label() const {
    std::ostringstream os;
    os << perturbation_id(kind);
    switch (kind) {
        case PerturbationKind::None:
            break;
        case PerturbationKind::Prefix:
        case PerturbationKind::Suffix:
            os << "[len=" << pad_length.lo << ".." << pad_length.hi << ",c=" << pad_value.lo << ".."
               << pad_value.hi << "]";
            break;
        case PerturbationKind::Insertion:
            os << "[len=" << pad_length.lo << ".." << pad_length.hi << ",i=" << insert_position.lo
               << ".." << insert_position.hi << "]";
            break;
        case PerturbationKind::Gaussian:
        case PerturbationKind::Sensitivity:
            if (eta.lo == eta.hi) os << "[eta=" << eta.lo << "]";
            else os << "[eta=" << eta.lo << ".." << eta.hi << "]";
            break;
        case PerturbationKind::Dependency:
            if (eta.lo == eta.hi) os << "[eta=" << eta.lo;
            else os << "[eta=" << eta.lo << ".." << eta.hi;
            os << ",w=" << window << "]";
            break;
        case PerturbationKind::RandomOffset:
            os << "[scale=" << offset_scale << (offset_mode == OffsetMode::Discrete ? ",discrete" : "")
               << "]";
            break;
        case PerturbationKind::Missing:
            os << "[rate=" << mask_rate << (sentinel == MissingSentinel::NaN ? ",nan" : "") << "]";
            break;
        case PerturbationKind::Reconstruction:
            os << "[tau=";
            for (std::size_t i = 0; i < temperatures.size(); ++i) os << (i ? "|" : "") << temperatures[i];
            os << "]";
            break;
    }
    return os.str();
}

void PerturbationSpec::validate() const {
    auto bad = [&](const std::string& what) {
        throw InvalidArgument(std::string(perturbation_id(kind)) + ": " + what);
    };
    auto check_range = [&](const Range& r, const char* name) {
        if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi))
            bad(std::string(name) + " range must satisfy lo <= hi");
    };
    switch (kind) {
        case PerturbationKind::None:
            break;
        case PerturbationKind::Prefix:
        case PerturbationKind::Suffix:
        case PerturbationKind::Insertion:
            check_range(pad_length, "pad_length");
            if (pad_length.lo < 0) bad("pad_length must be >= 0");
            check_range(pad_value, "pad_value");
            check_range(insert_position, "insert_position");
            if (insert_position.lo < 0.0 || insert_position.hi > 1.0) bad("insert_position must lie in [0, 1]");
            break;
        case PerturbationKind::Gaussian:
        case PerturbationKind::Sensitivity:
        case PerturbationKind::Dependency:
            check_range(eta, "eta");
            if (eta.lo < 0.0) bad("eta must be >= 0");
            if (kind == PerturbationKind::Dependency && (window < 1 || window % 2 == 0))
                bad("window must be odd and >= 1");
            if (period && *period < 2) bad("period must be >= 2");
            break;
        case PerturbationKind::RandomOffset:
            if (!(offset_scale >= 0.0)) bad("offset_scale must be >= 0");
            break;
        case PerturbationKind::Missing:
            if (!(mask_rate >= 0.0 && mask_rate < 1.0)) bad("mask_rate must be in [0, 1)");
            break;
        case PerturbationKind::Reconstruction:
            if (temperatures.empty()) bad("needs at least one temperature");
            for (double t : temperatures)
                if (!(t >= 0.0)) bad("temperatures must be >= 0");
            break;
    }
}

PerturbationSpec with_intensity(PerturbationSpec spec, double value) {
    switch (spec.kind) {
        case PerturbationKind::None:
            break;
        case PerturbationKind::Prefix:
        case PerturbationKind::Suffix:
        case PerturbationKind::Insertion:
            spec.pad_length = {std::round(value), std::round(value)};
            break;
        case PerturbationKind::Gaussian:
        case PerturbationKind::Sensitivity:
        case PerturbationKind::Dependency:
            spec.eta = {value, value};
            break;
        case PerturbationKind::RandomOffset:
            spec.offset_scale = value;
            break;
        case PerturbationKind::Missing:
            spec.mask_rate = value;
            break;
        case PerturbationKind::Reconstruction:
            spec.temperatures = {value};
            break;
    }
    return spec;
}

// ---- structural -----------------------------------------------------------

namespace {

std::vector<double> broadcast(std::size_t channels, double c) {
    return std::vector<double>(channels, c);
}

TimeSeries with_values(const TimeSeries& like, Matrix values, bool nan_masked = false) {
    return TimeSeries(std::move(values), like.name, like.freq_hint, nan_masked || like.nan_masked);
}

TimeSeries pad(const TimeSeries& x, std::size_t len, std::span<const double> c, bool before) {
    if (c.size() != x.channels()) throw DimensionError("padding value needs one entry per channel");
    const std::size_t n = x.length();
    const std::size_t d = x.channels();
    Matrix out(n + len, d);
    const std::size_t offset = before ? len : 0;
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t k = 0; k < d; ++k) out(t + offset, k) = x.values(t, k);
    const std::size_t block = before ? 0 : n;
    for (std::size_t t = 0; t < len; ++t)
        for (std::size_t k = 0; k < d; ++k) out(block + t, k) = c[k];
    return with_values(x, std::move(out));
}

}  // namespace

TimeSeries prefix_pad(const TimeSeries& x, std::size_t len, std::span<const double> c) {
    return pad(x, len, c, true);
}

TimeSeries prefix_pad(const TimeSeries& x, std::size_t len, double c) {
    return pad(x, len, broadcast(x.channels(), c), true);
}

TimeSeries suffix_pad(const TimeSeries& x, std::size_t len, std::span<const double> c) {
    return pad(x, len, c, false);
}

TimeSeries suffix_pad(const TimeSeries& x, std::size_t len, double c) {
    return pad(x, len, broadcast(x.channels(), c), false);
}

TimeSeries middle_insert(const TimeSeries& x, std::size_t len, std::size_t position) {
    const std::size_t n = x.length();
    if (position < 1 || position + 1 > n) {
        throw InvalidArgument("insertion position " + std::to_string(position) + " outside [1, " +
                              std::to_string(n == 0 ? 0 : n - 1) + "]");
    }
    const std::size_t d = x.channels();
    Matrix out(n + len, d);
    std::size_t row = 0;
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < d; ++k) out(row, k) = x.values(t, k);
        ++row;
        if (t + 1 == position) {
            for (std::size_t j = 0; j < len; ++j, ++row)
                for (std::size_t k = 0; k < d; ++k) out(row, k) = x.values(t, k);
        }
    }
    return with_values(x, std::move(out));
}

// ---- noise ----------------------------------------------------------------

TimeSeries gaussian_noise(const TimeSeries& x, double eta, std::uint64_t seed) {
    if (!(eta >= 0.0)) throw InvalidArgument("gaussian eta must be >= 0");
    if (eta == 0.0) return x;
    const auto sigma = channel_stds(x.values);
    Rng rng(seed);
    Matrix out = x.values;
    for (std::size_t t = 0; t < out.rows(); ++t)
        for (std::size_t k = 0; k < out.cols(); ++k) out(t, k) += eta * sigma[k] * rng.normal();
    return with_values(x, std::move(out));
}

TimeSeries random_offset(const TimeSeries& x, std::uint64_t seed, OffsetMode mode, double scale) {
    if (!(scale >= 0.0)) throw InvalidArgument("offset scale must be >= 0");
    const auto sigma = channel_stds(x.values);
    Rng rng(seed);
    Matrix out = x.values;
    for (std::size_t k = 0; k < out.cols(); ++k) {
        const double bound = scale * sigma[k];
        const double c = mode == OffsetMode::Continuous ? rng.uniform(-bound, bound)
                                                        : (rng.bernoulli(0.5) ? bound : -bound);
        if (c == 0.0) continue;
        for (std::size_t t = 0; t < out.rows(); ++t) out(t, k) += c;
    }
    return with_values(x, std::move(out));
}

TimeSeries missing_data(const TimeSeries& x, double mask_rate, std::uint64_t seed, MissingSentinel sentinel) {
    if (!(mask_rate >= 0.0 && mask_rate < 1.0)) throw InvalidArgument("mask_rate must be in [0, 1)");
    if (mask_rate == 0.0) return x;
    const double fill = sentinel == MissingSentinel::NaN ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    Rng rng(seed);
    Matrix out = x.values;
    for (double& v : out.flat())
        if (rng.bernoulli(mask_rate)) v = fill;
    return with_values(x, std::move(out), sentinel == MissingSentinel::NaN);
}

// ---- structure-driven -----------------------------------------------------

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

DirectionField finish_field(std::span<const double> x, std::vector<double> magnitude) {
    DirectionField f;
    f.magnitude = std::move(magnitude);
    f.signed_field.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        f.signed_field[i] = sign(x[i] + kStructureEpsilon) * std::abs(f.magnitude[i]);
    const double mu = mean(f.signed_field);
    f.centered.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f.centered[i] = f.signed_field[i] - mu;
    return f;
}

}  // namespace

DirectionField sensitivity_field(std::span<const double> x, std::size_t period) {
    const auto dec = stl_decompose(x, period);
    const auto grad = gradient(dec.trend);
    const auto shifted = roll(dec.seasonal, static_cast<long long>(period));
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        f[i] = std::abs(grad[i]) + std::abs(dec.seasonal[i] - shifted[i]) + std::abs(dec.residual[i]);
    }
    return finish_field(x, std::move(f));
}

DirectionField dependency_field(std::span<const double> x, std::size_t period, std::size_t window) {
    const auto dec = stl_decompose(x, period);
    const auto grad = gradient(dec.trend);
    const auto spread = local_std(dec.residual, window);
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = grad[i] + std::abs(dec.seasonal[i]) + spread[i];
    return finish_field(x, std::move(f));
}

std::vector<double> apply_direction(std::span<const double> x, std::span<const double> field, double eta) {
    if (x.size() != field.size()) throw DimensionError("direction field length mismatch");
    const double scale = eta * l2_norm(x) / (l2_norm(field) + kStructureEpsilon);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + scale * field[i];
    return out;
}

namespace {

template <typename FieldFn>
TimeSeries apply_per_channel(const TimeSeries& x, double eta, FieldFn&& field_of) {
    if (!(eta >= 0.0)) throw InvalidArgument("eta must be >= 0");
    Matrix out = x.values;
    for (std::size_t k = 0; k < x.channels(); ++k) {
        const auto ch = x.values.channel(k);
        const DirectionField f = field_of(std::span<const double>(ch));
        out.set_channel(k, apply_direction(ch, f.centered, eta));
    }
    return with_values(x, std::move(out));
}

}  // namespace

TimeSeries task_sensitivity(const TimeSeries& x, double eta, std::size_t period) {
    return apply_per_channel(x, eta, [&](std::span<const double> ch) { return sensitivity_field(ch, period); });
}

TimeSeries task_dependency(const TimeSeries& x, double eta, std::size_t period, std::size_t window) {
    return apply_per_channel(x, eta,
                             [&](std::span<const double> ch) { return dependency_field(ch, period, window); });
}

TimeSeries task_reconstruction(const TimeSeries& x, double temperature, const Backend& backend,
                               std::uint64_t seed) {
    return backend.reconstruct(x, temperature, seed);
}

// ---- dispatch -------------------------------------------------------------

double aligned_similarity(const TimeSeries& original, const TimeSeries& perturbed) {
    if (original.channels() != perturbed.channels()) throw DimensionError("channel count mismatch");
    const std::size_t overlap = std::min(original.length(), perturbed.length());
    const Matrix a = original.values.tail_rows(overlap);
    const Matrix b = perturbed.values.tail_rows(overlap);
    try {
        return cosine_similarity(a.flat(), b.flat());
    } catch (const UndefinedSimilarity&) {
        // Both all zero over the overlap: nothing changed that cosine can see.
        return 1.0;
    }
}

PerturbedInput perturb(const TimeSeries& x, const PerturbationSpec& spec, std::uint64_t seed,
                       const Backend* backend) {
    spec.validate();
    Rng rng(seed);
    // Sub-strategies that need their own stream get one derived from `seed`.
    const std::uint64_t inner = derive_seed(seed, "inner", 0);

    const auto draw_length = [&] {
        return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(std::ceil(spec.pad_length.lo)),
                                                        static_cast<std::int64_t>(std::floor(spec.pad_length.hi))));
    };
    const auto draw = [&](const Range& r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); };
    const auto period_for = [&] {
        return spec.period ? *spec.period
                           : default_period(x.freq_hint ? std::optional<std::string_view>(*x.freq_hint)
                                                        : std::nullopt);
    };

    TimeSeries out;
    switch (spec.kind) {
        case PerturbationKind::None:
            out = x;
            break;
        case PerturbationKind::Prefix:
        case PerturbationKind::Suffix: {
            const std::size_t len = draw_length();
            const double c = draw(spec.pad_value);
            const auto mu = channel_means(x.values);
            const auto sd = channel_stds(x.values);
            std::vector<double> raw(x.channels());
            for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = mu[k] + c * sd[k];
            if (len == 0) out = x;
            else out = spec.kind == PerturbationKind::Prefix ? prefix_pad(x, len, raw) : suffix_pad(x, len, raw);
            break;
        }
        case PerturbationKind::Insertion: {
            const std::size_t len = draw_length();
            if (x.length() < 2) throw InvalidArgument("insertion needs L >= 2");
            const double frac = draw(spec.insert_position);
            const auto n = static_cast<double>(x.length());
            const auto pos = static_cast<std::size_t>(
                std::clamp(std::floor(frac * n), 1.0, n - 1.0));
            out = len == 0 ? x : middle_insert(x, len, pos);
            break;
        }
        case PerturbationKind::Gaussian:
            out = gaussian_noise(x, draw(spec.eta), inner);
            break;
        case PerturbationKind::RandomOffset:
            out = random_offset(x, inner, spec.offset_mode, spec.offset_scale);
            break;
        case PerturbationKind::Missing:
            out = missing_data(x, spec.mask_rate, inner, spec.sentinel);
            break;
        case PerturbationKind::Sensitivity:
            out = task_sensitivity(x, draw(spec.eta), period_for());
            break;
        case PerturbationKind::Dependency:
            out = task_dependency(x, draw(spec.eta), period_for(), spec.window);
            break;
        case PerturbationKind::Reconstruction: {
            if (backend == nullptr) throw CapabilityError("reconstruction perturbation needs a backend");
            const auto idx = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(spec.temperatures.size()) - 1));
            out = task_reconstruction(x, spec.temperatures[idx], *backend, inner);
            break;
        }
    }

    PerturbedInput pi;
    pi.source_similarity = spec.kind == PerturbationKind::None ? 1.0 : aligned_similarity(x, out);
    pi.series = std::move(out);
    pi.spec = spec;
    pi.seed = seed;
    return pi;
}

bool fidelity_gate(const PerturbedInput& pi, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("fidelity threshold must be in (0, 1]");
    return pi.source_similarity >= threshold;
}

}  // namespace divscale
