#include "divscale/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "divscale/csv.hpp"

namespace divscale {

SplitSpec SplitSpec::counts(std::size_t train, std::size_t val, std::size_t test) {
    SplitSpec s;
    s.kind = Kind::Counts;
    s.train = train;
    s.val = val;
    s.test = test;
    return s;
}

SplitSpec SplitSpec::fractions(double train_frac, double val_frac) {
    if (!(train_frac >= 0.0 && val_frac >= 0.0 && train_frac + val_frac < 1.0)) {
        throw ConfigError("split fractions must be >= 0 and sum to less than 1");
    }
    SplitSpec s;
    s.kind = Kind::Fractions;
    s.train_frac = train_frac;
    s.val_frac = val_frac;
    return s;
}

SplitSpec SplitSpec::preset(std::string_view name) {
    std::string n;
    for (char c : name) n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (n == "full" || n == "none") return full();
    if (n == "etth1" || n == "etth2") return counts(8640, 2880, 2880);
    if (n == "ettm1" || n == "ettm2") return counts(34560, 11520, 11520);
    if (n == "electricity" || n == "ecl") return counts(18412, 2630, 5261);
    if (n == "traffic") return counts(12280, 1754, 3509);
    throw ConfigError("unknown split preset '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<double> parse_number(std::string_view s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Seconds since 1970 for "YYYY-MM-DD[ T]HH:MM[:SS]".
std::optional<long long> parse_timestamp(std::string_view s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    const std::string t = trim(s);
    const int got = std::sscanf(t.c_str(), "%d-%d-%d%*c%d:%d:%d", &y, &mo, &d, &h, &mi, &se);
    if (got < 3) return std::nullopt;
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<long long>(days) * 86400 + h * 3600LL + mi * 60LL + se;
}

}  // namespace

std::optional<std::string> infer_freq(std::string_view first, std::string_view second) {
    const auto a = parse_timestamp(first);
    const auto b = parse_timestamp(second);
    if (!a || !b || *b <= *a) return std::nullopt;
    const long long delta = *b - *a;
    if (delta == 3600) return "H";
    if (delta == 900) return "15min";
    if (delta == 86400) return "D";
    return std::to_string(delta) + "s";
}

TimeSeries load_dataset(const std::filesystem::path& path, const std::string& target, const SplitSpec& split) {
    std::ifstream in(path);
    if (!in) throw DatasetError("cannot open dataset '" + path.string() + "'");
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header) || (header.size() == 1 && trim(header[0]).empty())) {
        throw DatasetError("dataset '" + path.string() + "' is empty");
    }
    for (auto& h : header) h = trim(h);
    const auto col = std::find(header.begin(), header.end(), target);
    if (col == header.end()) {
        std::string names;
        for (const auto& h : header) names += (names.empty() ? "" : ", ") + h;
        throw DatasetError("column '" + target + "' not found in '" + path.string() + "'; available: " + names);
    }
    const std::size_t target_idx = static_cast<std::size_t>(col - header.begin());
    std::optional<std::size_t> date_idx;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string lower;
        for (char c : header[i]) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (lower == "date" || lower == "timestamp" || lower == "time") {
            date_idx = i;
            break;
        }
    }

    std::vector<double> values;
    std::vector<std::string> dates;
    std::vector<std::string> rec;
    while (reader.next(rec)) {
        if (rec.size() == 1 && trim(rec[0]).empty()) continue;  // blank line
        if (rec.size() <= target_idx) {
            throw DatasetError("line " + std::to_string(reader.line()) + " has " + std::to_string(rec.size()) +
                               " fields; column '" + target + "' missing");
        }
        const auto v = parse_number(rec[target_idx]);
        if (!v) {
            throw DatasetError("non-numeric value '" + rec[target_idx] + "' at line " + std::to_string(reader.line()) +
                               ", column '" + target + "'");
        }
        values.push_back(*v);
        if (date_idx && dates.size() < 2 && rec.size() > *date_idx) dates.push_back(rec[*date_idx]);
    }
    if (values.empty()) throw DatasetError("dataset '" + path.string() + "' has no data rows");

    std::size_t begin = 0, end = values.size();
    switch (split.kind) {
        case SplitSpec::Kind::Full:
            break;
        case SplitSpec::Kind::Counts:
            begin = split.train + split.val;
            end = std::min(values.size(), begin + split.test);
            break;
        case SplitSpec::Kind::Fractions: {
            const auto n = static_cast<double>(values.size());
            begin = static_cast<std::size_t>(std::floor(n * (split.train_frac + split.val_frac)));
            break;
        }
    }
    if (begin >= end) {
        throw DatasetError("dataset '" + path.string() + "' has " + std::to_string(values.size()) +
                           " rows, too few for the requested split");
    }

    std::optional<std::string> freq;
    if (dates.size() == 2) freq = infer_freq(dates[0], dates[1]);
    std::vector<double> slice(values.begin() + static_cast<std::ptrdiff_t>(begin),
                              values.begin() + static_cast<std::ptrdiff_t>(end));
    TimeSeries ts(Matrix::column(slice), path.stem().string() + ":" + target, freq);
    return ts;
}

std::size_t window_count(std::size_t len, std::size_t context_length, std::size_t horizon, std::size_t stride) {
    if (stride < 1) throw InvalidArgument("stride must be >= 1");
    if (len < context_length + horizon) return 0;
    return (len - context_length - horizon) / stride + 1;
}

std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t context_length, std::size_t horizon,
                                    std::size_t stride) {
    if (context_length < 1 || horizon < 1) throw InvalidArgument("context length and horizon must be >= 1");
    const std::size_t count = window_count(series.length(), context_length, horizon, stride);
    if (count == 0) {
        throw InsufficientLength("series '" + series.name + "' has " + std::to_string(series.length()) +
                                 " points; sliding windows need at least " +
                                 std::to_string(context_length + horizon));
    }
    std::vector<Window> out;
    out.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t off = w * stride;
        out.push_back(Window{
            TimeSeries(series.values.slice_rows(off, context_length), series.name, series.freq_hint),
            Forecast(series.values.slice_rows(off + context_length, horizon)),
            off,
        });
    }
    return out;
}

}  // namespace divscale
