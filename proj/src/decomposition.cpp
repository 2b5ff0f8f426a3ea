#include "divscale/decomposition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "divscale/error.hpp"

namespace divscale {

Decomposition stl_decompose(std::span<const double> x, std::size_t period) {
    if (period < 2) {
        throw InvalidArgument("decomposition period must be >= 2 (got " + std::to_string(period) + ")");
    }
    const std::size_t n = x.size();
    if (n < 2 * period) {
        throw InsufficientLength("decomposition needs L >= 2 * period (L=" + std::to_string(n) +
                                 ", period=" + std::to_string(period) + ")");
    }

    const std::size_t half = period / 2;
    const bool even = period % 2 == 0;
    const double p = static_cast<double>(period);

    Decomposition out;
    out.period = period;
    out.trend.assign(n, 0.0);

    // Defined for t in [half, n - 1 - half].
    const std::size_t first = half;
    const std::size_t last = n - 1 - half;
    for (std::size_t t = first; t <= last; ++t) {
        double acc = 0.0;
        if (even) {
            acc += 0.5 * x[t - half] + 0.5 * x[t + half];
            for (std::size_t k = t - half + 1; k < t + half; ++k) acc += x[k];
        } else {
            for (std::size_t k = t - half; k <= t + half; ++k) acc += x[k];
        }
        out.trend[t] = acc / p;
    }
    for (std::size_t t = 0; t < first; ++t) out.trend[t] = out.trend[first];
    for (std::size_t t = last + 1; t < n; ++t) out.trend[t] = out.trend[last];

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_count(period, 0);
    for (std::size_t t = first; t <= last; ++t) {
        phase_sum[t % period] += x[t] - out.trend[t];
        ++phase_count[t % period];
    }
    std::vector<double> profile(period, 0.0);
    for (std::size_t k = 0; k < period; ++k) {
        profile[k] = phase_sum[k] / static_cast<double>(phase_count[k]);
    }
    double centre = 0.0;
    for (double v : profile) centre += v;
    centre /= p;
    for (double& v : profile) v -= centre;

    out.seasonal.resize(n);
    out.residual.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        out.seasonal[t] = profile[t % period];
        out.residual[t] = x[t] - out.trend[t] - out.seasonal[t];
    }
    return out;
}

std::vector<double> gradient(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 2) throw InvalidArgument("gradient needs at least 2 points");
    std::vector<double> g(n);
    g[0] = x[1] - x[0];
    g[n - 1] = x[n - 1] - x[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = 0.5 * (x[i + 1] - x[i - 1]);
    return g;
}

std::vector<double> roll(std::span<const double> x, long long k) {
    const auto n = static_cast<long long>(x.size());
    std::vector<double> out(x.size());
    if (n == 0) return out;
    const long long shift = ((k % n) + n) % n;
    for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>((i + shift) % n)] = x[static_cast<std::size_t>(i)];
    return out;
}

std::vector<double> local_std(std::span<const double> x, std::size_t window) {
    const std::size_t n = x.size();
    if (window < 1 || window > n || window % 2 == 0) {
        throw InvalidArgument("local_std window must be odd and in [1, L] (w=" +
                              std::to_string(window) + ", L=" + std::to_string(n) + ")");
    }
    const std::size_t half = window / 2;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        const double count = static_cast<double>(hi - lo + 1);
        double mu = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) mu += x[k];
        mu /= count;
        double var = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) var += (x[k] - mu) * (x[k] - mu);
        out[i] = std::sqrt(var / count);
    }
    return out;
}

std::size_t default_period(std::optional<std::string_view> freq_hint) {
    if (!freq_hint) return 24;
    std::string f;
    for (char c : *freq_hint) f.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (f == "15min" || f == "15t" || f == "15m") return 96;
    return 24;
}

}  // namespace divscale
