#include "divscale/protocol.hpp"

#include <json.hpp>

namespace divscale::protocol {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse_object(std::string_view line, const char* what) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const ojson::parse_error& e) {
        throw ProtocolError(std::string("malformed ") + what + ": " + e.what());
    }
    if (!j.is_object()) throw ProtocolError(std::string(what) + " is not a JSON object");
    return j;
}

template <typename T>
T field(const ojson& j, const char* key, const char* what) {
    const auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string(what) + " lacks \"" + key + "\"");
    try {
        return it->get<T>();
    } catch (const ojson::exception&) {
        throw ProtocolError(std::string(what) + " has a mistyped \"" + key + "\"");
    }
}

std::uint64_t unsigned_field(const ojson& j, const char* key, const char* what) {
    const auto it = j.find(key);
    if (it == j.end()) throw ProtocolError(std::string(what) + " lacks \"" + key + "\"");
    if (!it->is_number_unsigned()) {
        if (it->is_number_integer() && it->get<std::int64_t>() >= 0) return it->get<std::uint64_t>();
        throw ProtocolError(std::string(what) + " field \"" + key + "\" must be a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

double number_field(const ojson& j, const char* key, const char* what) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) {
        throw ProtocolError(std::string(what) + " field \"" + key + "\" must be a number");
    }
    return it->get<double>();
}

ojson matrix_json(const Matrix& m) {
    ojson rows = ojson::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        ojson row = ojson::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix json_matrix(const ojson& j, const char* what) {
    if (!j.is_array()) throw ProtocolError(std::string(what) + " must be an array of rows");
    std::vector<std::vector<double>> rows;
    rows.reserve(j.size());
    for (const auto& row : j) {
        if (!row.is_array()) throw ProtocolError(std::string(what) + " rows must be arrays");
        std::vector<double> r;
        r.reserve(row.size());
        for (const auto& v : row) {
            if (!v.is_number()) throw ProtocolError(std::string(what) + " entries must be numbers");
            r.push_back(v.get<double>());
        }
        rows.push_back(std::move(r));
    }
    try {
        return Matrix::from_rows(rows);
    } catch (const DimensionError&) {
        throw ProtocolError(std::string(what) + " is ragged");
    }
}

}  // namespace

std::string encode_hello(const BackendDescriptor& d) {
    ojson j;
    j["proto"] = kVersion;
    j["name"] = d.name;
    j["supports_temperature"] = d.supports_temperature;
    j["supports_top_p"] = d.supports_top_p;
    j["supports_reconstruction"] = d.supports_reconstruction;
    j["max_context"] = d.max_context;
    j["d_out"] = d.d_out;
    return j.dump();
}

BackendDescriptor decode_hello(std::string_view line) {
    const ojson j = parse_object(line, "hello");
    const auto proto = j.find("proto");
    if (proto == j.end() || !proto->is_number_integer()) throw ProtocolError("hello lacks an integer \"proto\"");
    if (proto->get<std::int64_t>() != kVersion) {
        throw VersionMismatch("backend speaks protocol " + std::to_string(proto->get<std::int64_t>()) +
                              ", expected " + std::to_string(kVersion));
    }
    BackendDescriptor d;
    d.name = field<std::string>(j, "name", "hello");
    d.supports_temperature = field<bool>(j, "supports_temperature", "hello");
    d.supports_top_p = field<bool>(j, "supports_top_p", "hello");
    d.supports_reconstruction = field<bool>(j, "supports_reconstruction", "hello");
    d.max_context = unsigned_field(j, "max_context", "hello");
    d.d_out = unsigned_field(j, "d_out", "hello");
    if (d.max_context < 1 || d.d_out < 1) throw ProtocolError("hello max_context and d_out must be >= 1");
    return d;
}

std::string encode_request(const Request& r) {
    ojson j;
    j["id"] = r.id;
    j["op"] = r.op;
    j["context"] = matrix_json(r.context);
    j["horizon"] = r.horizon;
    j["num_samples"] = r.num_samples;
    j["temperature"] = r.temperature;
    j["top_p"] = r.top_p;
    j["seed"] = r.seed;
    return j.dump();
}

Request decode_request(std::string_view line) {
    const ojson j = parse_object(line, "request");
    Request r;
    r.id = unsigned_field(j, "id", "request");
    r.op = field<std::string>(j, "op", "request");
    if (r.op != "forecast" && r.op != "reconstruct") throw ProtocolError("unknown op '" + r.op + "'");
    const auto ctx = j.find("context");
    if (ctx == j.end()) throw ProtocolError("request lacks \"context\"");
    r.context = json_matrix(*ctx, "context");
    r.horizon = unsigned_field(j, "horizon", "request");
    r.num_samples = unsigned_field(j, "num_samples", "request");
    r.temperature = number_field(j, "temperature", "request");
    r.top_p = number_field(j, "top_p", "request");
    r.seed = unsigned_field(j, "seed", "request");
    return r;
}

std::string encode_response(std::uint64_t id, const std::vector<Matrix>& samples) {
    ojson j;
    j["id"] = id;
    ojson arr = ojson::array();
    for (const auto& m : samples) arr.push_back(matrix_json(m));
    j["samples"] = std::move(arr);
    return j.dump();
}

std::string encode_error(std::uint64_t id, std::string_view code, std::string_view message) {
    ojson j;
    j["id"] = id;
    j["error"] = {{"code", std::string(code)}, {"message", std::string(message)}};
    return j.dump();
}

Response decode_response(std::string_view line) {
    const ojson j = parse_object(line, "response");
    Response r;
    r.id = unsigned_field(j, "id", "response");
    if (const auto err = j.find("error"); err != j.end()) {
        if (!err->is_object()) throw ProtocolError("response error must be an object");
        r.error = ErrorInfo{field<std::string>(*err, "code", "error"), field<std::string>(*err, "message", "error")};
        return r;
    }
    const auto samples = j.find("samples");
    if (samples == j.end() || !samples->is_array()) throw ProtocolError("response lacks a \"samples\" array");
    for (const auto& s : *samples) r.samples.push_back(json_matrix(s, "sample"));
    return r;
}

std::string encode_shutdown() {
    ojson j;
    j["op"] = "shutdown";
    return j.dump();
}

bool is_shutdown(std::string_view line) {
    try {
        const auto j = ojson::parse(line);
        return j.is_object() && j.size() == 1 && j.value("op", "") == "shutdown";
    } catch (const ojson::exception&) {
        return false;
    }
}

}  // namespace divscale::protocol
