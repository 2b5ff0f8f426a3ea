#include "divscale/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "divscale/rng.hpp"

namespace divscale {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("matrix data size " + std::to_string(data_.size()) +
                             " does not match " + std::to_string(rows_) + "x" +
                             std::to_string(cols_));
    }
}

Matrix Matrix::column(std::span<const double> values) {
    return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t width = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * width);
    for (const auto& r : rows) {
        if (r.size() != width) throw DimensionError("ragged rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), width, std::move(data));
}

std::vector<double> Matrix::channel(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
}

void Matrix::set_channel(std::size_t c, std::span<const double> values) {
    if (values.size() != rows_) throw DimensionError("channel length mismatch");
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

Matrix Matrix::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw DimensionError("row slice out of range");
    return Matrix(count, cols_,
                  std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                      data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_)));
}

Matrix Matrix::tail_rows(std::size_t count) const {
    if (count >= rows_) return *this;
    return slice_rows(rows_ - count, count);
}

Matrix Matrix::leading_cols(std::size_t count) const {
    if (count >= cols_) return *this;
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, c);
    return out;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

TimeSeries::TimeSeries(Matrix v, std::string series_name, std::optional<std::string> freq,
                       bool allow_nan)
    : values(std::move(v)), freq_hint(std::move(freq)), name(std::move(series_name)),
      nan_masked(allow_nan) {
    if (values.rows() < 1 || values.cols() < 1) {
        throw InvalidArgument("time series needs L >= 1 and D >= 1");
    }
    for (double x : values.flat()) {
        if (std::isfinite(x)) continue;
        if (allow_nan && std::isnan(x)) continue;
        throw InvalidArgument("time series '" + name + "' contains non-finite values");
    }
}

TimeSeries TimeSeries::univariate(std::span<const double> v, std::string series_name) {
    return TimeSeries(Matrix::column(v), std::move(series_name));
}

Forecast::Forecast(Matrix v) : values(std::move(v)) {
    if (values.rows() < 1 || values.cols() < 1) {
        throw InvalidArgument("forecast needs H >= 1 and D_out >= 1");
    }
    if (!values.all_finite()) throw BackendError("forecast contains non-finite values");
}

Forecast Forecast::univariate(std::span<const double> v) {
    return Forecast(Matrix::column(v));
}

void CandidatePool::add(Forecast f, Provenance p) {
    if (!candidates_.empty() &&
        (f.horizon() != horizon() || f.channels() != channels())) {
        throw DimensionError("candidate shape differs from pool shape");
    }
    candidates_.push_back(std::move(f));
    provenance_.push_back(std::move(p));
}

void CandidatePool::append(CandidatePool other) {
    for (std::size_t i = 0; i < other.size(); ++i) {
        add(std::move(other.candidates_[i]), std::move(other.provenance_[i]));
    }
}

std::size_t CandidatePool::horizon() const {
    if (candidates_.empty()) throw InvalidArgument("empty candidate pool");
    return candidates_.front().horizon();
}

std::size_t CandidatePool::channels() const {
    if (candidates_.empty()) throw InvalidArgument("empty candidate pool");
    return candidates_.front().channels();
}

SeedTree SeedTree::child(std::string label, std::uint64_t index) const {
    SeedTree out = *this;
    out.path_.emplace_back(std::move(label), index);
    return out;
}

std::uint64_t SeedTree::seed() const noexcept {
    std::uint64_t s = master_;
    for (const auto& [label, index] : path_) s = derive_seed(s, label, index);
    return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view label, std::uint64_t index) noexcept {
    return mix64(mix64(base ^ stable_hash(label)) ^ index);
}

std::uint64_t derive_seed(const SeedTree& tree, std::string_view label, std::uint64_t index) noexcept {
    return derive_seed(tree.seed(), label, index);
}

namespace {

void require_same_shape(const Forecast& a, const Forecast& b) {
    if (a.horizon() != b.horizon() || a.channels() != b.channels()) {
        std::ostringstream os;
        os << "shape mismatch: [" << a.horizon() << "x" << a.channels() << "] vs ["
           << b.horizon() << "x" << b.channels() << "]";
        throw DimensionError(os.str());
    }
}

}  // namespace

double mse(const Forecast& pred, const Forecast& truth) {
    require_same_shape(pred, truth);
    const auto p = pred.values.flat();
    const auto t = truth.values.flat();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double e = p[i] - t[i];
        acc += e * e;
    }
    return acc / static_cast<double>(p.size());
}

double mae(const Forecast& pred, const Forecast& truth) {
    require_same_shape(pred, truth);
    const auto p = pred.values.flat();
    const auto t = truth.values.flat();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - t[i]);
    return acc / static_cast<double>(p.size());
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine similarity needs equal lengths (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) continue;
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 && nb == 0.0) throw UndefinedSimilarity("cosine similarity of two zero vectors");
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

Matrix zscore_channels(const Matrix& m) {
    const auto mu = channel_means(m);
    const auto sd = channel_stds(m);
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            out(r, c) = sd[c] > 0.0 ? (m(r, c) - mu[c]) / sd[c] : 0.0;
    return out;
}

}  // namespace

double cosine_similarity(const TimeSeries& a, const TimeSeries& b, SimilarityOptions opts) {
    if (a.channels() != b.channels()) throw DimensionError("channel count mismatch");
    if (!opts.zscore) return cosine_similarity(a.values.flat(), b.values.flat());
    const Matrix za = zscore_channels(a.values);
    const Matrix zb = zscore_channels(b.values);
    return cosine_similarity(za.flat(), zb.flat());
}

std::vector<double> channel_means(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (std::isnan(m(r, c))) continue;
            acc += m(r, c);
            ++n;
        }
        out[c] = n ? acc / static_cast<double>(n) : 0.0;
    }
    return out;
}

std::vector<double> channel_stds(const Matrix& m) {
    const auto mu = channel_means(m);
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (std::isnan(m(r, c))) continue;
            const double d = m(r, c) - mu[c];
            acc += d * d;
            ++n;
        }
        out[c] = n > 1 ? std::sqrt(acc / static_cast<double>(n - 1)) : 0.0;
    }
    return out;
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

void KahanSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

}  // namespace divscale

namespace divscale {

void rethrow_with_context(std::exception_ptr e, const std::string& context) {
    const auto msg = [&](const std::exception& x) { return context + ": " + x.what(); };
    try {
        std::rethrow_exception(e);
    } catch (const TransportError& x) {
        throw TransportError(msg(x));
    } catch (const ProtocolError& x) {
        throw ProtocolError(msg(x));
    } catch (const BackendError& x) {
        throw BackendError(msg(x));
    } catch (const CapabilityError& x) {
        throw CapabilityError(msg(x));
    } catch (const InsufficientLength& x) {
        throw InsufficientLength(msg(x));
    } catch (const AssumptionError& x) {
        throw AssumptionError(msg(x));
    } catch (const InvalidArgument& x) {
        throw InvalidArgument(msg(x));
    } catch (const DimensionError& x) {
        throw DimensionError(msg(x));
    } catch (const UndefinedSimilarity& x) {
        throw UndefinedSimilarity(msg(x));
    } catch (const DatasetError& x) {
        throw DatasetError(msg(x));
    } catch (const ConfigError& x) {
        throw ConfigError(msg(x));
    } catch (const Error& x) {
        throw Error(msg(x));
    }
}

}  // namespace divscale
