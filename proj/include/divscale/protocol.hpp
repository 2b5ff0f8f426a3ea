#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "divscale/backend.hpp"
#include "divscale/core.hpp"

// Newline-delimited JSON spoken between the harness and forecaster processes.
// Child -> parent: one hello line, then one response or error per request.
// Parent -> child: requests, finally {"op":"shutdown"} and EOF.
// stderr of the child is reserved for logs.
namespace divscale::protocol {

inline constexpr int kVersion = 1;

class VersionMismatch : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

struct Request {
    std::uint64_t id = 0;
    std::string op = "forecast";  // "forecast" | "reconstruct"
    Matrix context;
    std::size_t horizon = 1;
    std::size_t num_samples = 1;
    double temperature = 0.0;
    double top_p = 1.0;
    std::uint64_t seed = 0;

    friend bool operator==(const Request&, const Request&) = default;
};

struct ErrorInfo {
    std::string code;  // "capability" | "bad_request" | "internal"
    std::string message;

    friend bool operator==(const ErrorInfo&, const ErrorInfo&) = default;
};

struct Response {
    std::uint64_t id = 0;
    // [num_samples] matrices of [horizon][d_out]
    std::vector<Matrix> samples;
    std::optional<ErrorInfo> error;
};

std::string encode_hello(const BackendDescriptor& d);
// Throws VersionMismatch when "proto" is not kVersion, ProtocolError on bad shape.
BackendDescriptor decode_hello(std::string_view line);

std::string encode_request(const Request& r);
// Throws ProtocolError on malformed input.
Request decode_request(std::string_view line);

std::string encode_response(std::uint64_t id, const std::vector<Matrix>& samples);
std::string encode_error(std::uint64_t id, std::string_view code, std::string_view message);
Response decode_response(std::string_view line);

std::string encode_shutdown();
// True when the line is a shutdown message.
bool is_shutdown(std::string_view line);

}  // namespace divscale::protocol
