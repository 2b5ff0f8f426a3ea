#include "divscale/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace divscale {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += csv_escape(fields[i]);
    }
    return out;
}

bool CsvReader::next(std::vector<std::string>& record) {
    record.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    int ch;
    record_line_ = line_ + 1;
    while ((ch = in_.get()) != std::char_traits<char>::eof()) {
        any = true;
        const char c = static_cast<char>(ch);
        if (quoted) {
            if (c == '"') {
                if (in_.peek() == '"') {
                    in_.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (in_.peek() == '\n') in_.get();
            ++line_;
            record.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            ++line_;
            record.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
    if (!any) return false;
    record.push_back(std::move(field));
    return true;
}

}  // namespace divscale
