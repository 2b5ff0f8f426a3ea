// Deterministic stand-in forecaster speaking the line protocol on stdio.
//
// forecast:    sample s, step h, channel d = last[d] + temperature * (s + (seed % 1000) / 1000)
// reconstruct: echoes the context
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "divscale/protocol.hpp"

namespace proto = divscale::protocol;
using ojson = nlohmann::ordered_json;

namespace {

std::string problem_with(const proto::Request& r, std::size_t max_context) {
    if (r.context.rows() == 0 || r.context.cols() == 0) return "context must be non-empty";
    if (!r.context.all_finite()) return "context must be finite";
    if (r.context.rows() > max_context) return "context longer than max_context";
    if (r.horizon < 1) return "horizon must be >= 1";
    if (r.num_samples < 1) return "num_samples must be >= 1";
    if (!(r.temperature >= 0.0)) return "temperature must be >= 0";
    if (!(r.top_p > 0.0 && r.top_p <= 1.0)) return "top_p must be in (0, 1]";
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mock forecaster for protocol tests", "mock_backend"};
    int proto_version = proto::kVersion;
    long exit_after = -1;
    bool no_reconstruct = false;
    bool hang = false;
    std::size_t max_context = 4096;
    app.add_option("--proto", proto_version, "Protocol version announced in hello");
    app.add_option("--exit-after", exit_after, "Exit without replying once this many requests were answered");
    app.add_flag("--no-reconstruct", no_reconstruct, "Declare and enforce no reconstruction support");
    app.add_flag("--hang", hang, "Never answer requests");
    app.add_option("--max-context", max_context, "Declared max_context");
    CLI11_PARSE(app, argc, argv);

    std::ios::sync_with_stdio(false);
    divscale::BackendDescriptor d;
    d.name = "mock-echo";
    d.supports_temperature = true;
    d.supports_top_p = false;
    d.supports_reconstruction = !no_reconstruct;
    d.max_context = max_context;
    d.d_out = 1;
    ojson hello = ojson::parse(proto::encode_hello(d));
    hello["proto"] = proto_version;
    std::cout << hello.dump() << '\n' << std::flush;

    long answered = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (proto::is_shutdown(line)) return 0;
        if (hang) {
            std::this_thread::sleep_for(std::chrono::hours(1));
            return 0;
        }
        if (exit_after >= 0 && answered >= exit_after) return 3;
        ++answered;

        ojson j;
        try {
            j = ojson::parse(line);
        } catch (const ojson::parse_error&) {
            std::cout << proto::encode_error(0, "bad_request", "malformed JSON") << '\n' << std::flush;
            continue;
        }
        std::uint64_t id = 0;
        if (j.is_object() && j.contains("id") && j["id"].is_number_unsigned()) id = j["id"].get<std::uint64_t>();

        proto::Request req;
        try {
            req = proto::decode_request(line);
        } catch (const divscale::ProtocolError& e) {
            std::cout << proto::encode_error(id, "bad_request", e.what()) << '\n' << std::flush;
            continue;
        }
        if (const auto p = problem_with(req, max_context); !p.empty()) {
            std::cout << proto::encode_error(id, "bad_request", p) << '\n' << std::flush;
            continue;
        }

        std::vector<divscale::Matrix> samples;
        if (req.op == "reconstruct") {
            if (no_reconstruct) {
                std::cout << proto::encode_error(id, "capability", "reconstruction not supported") << '\n'
                          << std::flush;
                continue;
            }
            samples.assign(req.num_samples, req.context);
        } else {
            const std::size_t last = req.context.rows() - 1;
            const double jitter = static_cast<double>(req.seed % 1000) / 1000.0;
            for (std::size_t s = 0; s < req.num_samples; ++s) {
                divscale::Matrix m(req.horizon, d.d_out);
                for (std::size_t h = 0; h < req.horizon; ++h) {
                    for (std::size_t c = 0; c < d.d_out; ++c) {
                        m(h, c) = req.context(last, c) + req.temperature * (static_cast<double>(s) + jitter);
                    }
                }
                samples.push_back(std::move(m));
            }
        }
        std::cout << proto::encode_response(id, samples) << '\n' << std::flush;
    }
    return 0;
}
