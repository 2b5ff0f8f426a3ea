#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace divscale {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// RFC 4180 field quoting: fields holding a comma, quote, CR or LF are quoted
// and inner quotes doubled.
std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);

/// Reads RFC 4180 records, including quoted fields that span lines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // False at end of input.
    bool next(std::vector<std::string>& record);
    // 1-based physical line where the last record started.
    std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

}  // namespace divscale
