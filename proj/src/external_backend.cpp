#include "divscale/external_backend.hpp"

#include <sstream>

#include "divscale/log.hpp"

namespace divscale {

ExternalBackend::ExternalBackend(std::vector<std::string> command, ExternalOptions options)
    : command_(std::move(command)), options_(options) {
    if (options_.processes < 1) options_.processes = 1;
    workers_.resize(options_.processes);
    for (std::size_t i = 0; i < workers_.size(); ++i) {
        workers_[i].proc = std::make_unique<ChildProcess>(command_);
        const auto hello = workers_[i].proc->read_line(options_.handshake_timeout);
        if (!hello) {
            const int status = workers_[i].proc->wait();
            throw TransportError("backend exited before sending hello (status " + std::to_string(status) + ")");
        }
        record('<', *hello);
        BackendDescriptor d = protocol::decode_hello(*hello);
        if (i == 0) {
            desc_ = std::move(d);
        } else if (!(d == desc_)) {
            throw ProtocolError("backend processes disagree on their hello descriptor");
        }
        free_.push_back(workers_.size() - 1 - i);
    }
}

ExternalBackend::~ExternalBackend() {
    try {
        shutdown();
    } catch (const std::exception& e) {
        log::warn(std::string("external backend shutdown: ") + e.what());
    }
}

void ExternalBackend::shutdown() {
    if (shut_down_) return;
    shut_down_ = true;
    const std::string line = protocol::encode_shutdown();
    for (auto& w : workers_) {
        if (!w.proc || w.dead) continue;
        try {
            record('>', line);
            w.proc->write_line(line);
            w.proc->close_stdin();
            while (w.proc->read_line(options_.handshake_timeout)) {
            }
            w.status = w.proc->wait();
        } catch (const TransportError&) {
            w.proc->kill();
        }
    }
}

std::optional<int> ExternalBackend::exit_status(std::size_t worker) const {
    if (worker >= workers_.size()) throw InvalidArgument("no such backend process");
    return workers_[worker].status;
}

void ExternalBackend::record(char dir, const std::string& line) const {
    if (options_.transcript == nullptr) return;
    std::lock_guard lock(transcript_mutex_);
    *options_.transcript << dir << ' ' << line << '\n';
}

std::size_t ExternalBackend::acquire() const {
    std::unique_lock lock(pool_mutex_);
    pool_cv_.wait(lock, [&] { return !free_.empty(); });
    const std::size_t i = free_.back();
    free_.pop_back();
    return i;
}

void ExternalBackend::release(std::size_t i) const {
    {
        std::lock_guard lock(pool_mutex_);
        free_.push_back(i);
    }
    pool_cv_.notify_one();
}

std::string ExternalBackend::roundtrip(std::size_t worker, const std::string& line, std::uint64_t id) const {
    auto& w = workers_[worker];
    if (w.dead) throw TransportError("backend process already exited; cannot serve request id " + std::to_string(id));
    try {
        record('>', line);
        w.proc->write_line(line);
        auto reply = w.proc->read_line(options_.request_timeout);
        if (!reply) {
            w.dead = true;
            const int status = w.proc->wait();
            throw TransportError("backend process exited (status " + std::to_string(status) +
                                 ") while serving request id " + std::to_string(id));
        }
        record('<', *reply);
        return *reply;
    } catch (const TransportError& e) {
        w.dead = true;
        const std::string msg = e.what();
        if (msg.find("request id") != std::string::npos) throw;
        throw TransportError(msg + " (request id " + std::to_string(id) + ")");
    }
}

protocol::Response ExternalBackend::exchange(protocol::Request req) const {
    req.id = next_id_.fetch_add(1);
    const std::string line = protocol::encode_request(req);
    const std::size_t w = acquire();
    std::string reply;
    try {
        reply = roundtrip(w, line, req.id);
    } catch (...) {
        release(w);
        throw;
    }
    release(w);
    auto resp = protocol::decode_response(reply);
    if (resp.id != req.id) {
        throw ProtocolError("response id " + std::to_string(resp.id) + " does not match request id " +
                            std::to_string(req.id));
    }
    return resp;
}

std::string ExternalBackend::exchange_raw(const std::string& line) const {
    const std::size_t w = acquire();
    try {
        auto reply = roundtrip(w, line, 0);
        release(w);
        return reply;
    } catch (...) {
        release(w);
        throw;
    }
}

namespace {

[[noreturn]] void raise_remote(const protocol::ErrorInfo& err, std::uint64_t id) {
    const std::string msg = "backend error for request id " + std::to_string(id) + " [" + err.code + "]: " + err.message;
    if (err.code == "capability") throw CapabilityError(msg);
    if (err.code == "bad_request") throw ProtocolError(msg);
    throw BackendError(msg);
}

}  // namespace

CandidatePool ExternalBackend::do_forecast(const ForecastRequest& req) const {
    protocol::Request wire;
    wire.op = "forecast";
    wire.context = req.context;
    wire.horizon = req.horizon;
    wire.num_samples = req.num_samples;
    wire.temperature = req.temperature;
    wire.top_p = req.top_p;
    // The wire has no candidate offset; fold it into the seed instead.
    wire.seed = req.candidate_offset == 0 ? req.seed : candidate_seed(req.seed, req.candidate_offset);
    const auto resp = exchange(wire);
    if (resp.error) raise_remote(*resp.error, resp.id);
    if (resp.samples.size() != req.num_samples) {
        throw BackendError("backend returned " + std::to_string(resp.samples.size()) + " samples for request id " +
                           std::to_string(resp.id) + ", expected " + std::to_string(req.num_samples));
    }
    CandidatePool pool;
    for (std::size_t j = 0; j < resp.samples.size(); ++j) {
        const auto& s = resp.samples[j];
        if (s.rows() != req.horizon || s.cols() < 1 || s.cols() > desc_.d_out) {
            throw BackendError("sample " + std::to_string(j) + " of request id " + std::to_string(resp.id) +
                               " has shape [" + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) + "]");
        }
        if (!s.all_finite()) throw BackendError("backend produced non-finite values for request id " + std::to_string(resp.id));
        pool.add(Forecast(s), Provenance{candidate_seed(wire.seed, j), "none", 1.0});
    }
    return pool;
}

Matrix ExternalBackend::do_reconstruct(const Matrix& context, double temperature, std::uint64_t seed) const {
    protocol::Request wire;
    wire.op = "reconstruct";
    wire.context = context;
    wire.horizon = context.rows();
    wire.num_samples = 1;
    wire.temperature = temperature;
    wire.top_p = 1.0;
    wire.seed = seed;
    const auto resp = exchange(wire);
    if (resp.error) raise_remote(*resp.error, resp.id);
    if (resp.samples.size() != 1) {
        throw BackendError("reconstruct for request id " + std::to_string(resp.id) + " returned " +
                           std::to_string(resp.samples.size()) + " samples");
    }
    return resp.samples.front();
}

std::unique_ptr<ExternalBackend> spawn_external(const std::vector<std::string>& command,
                                                std::chrono::milliseconds handshake_timeout,
                                                std::size_t processes) {
    ExternalOptions opts;
    opts.handshake_timeout = handshake_timeout;
    opts.processes = processes;
    return std::make_unique<ExternalBackend>(command, opts);
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> out;
    std::string cur;
    char quote = 0;
    bool have = false;
    for (char c : command) {
        if (quote) {
            if (c == quote) quote = 0;
            else cur.push_back(c);
        } else if (c == '"' || c == '\'') {
            quote = c;
            have = true;
        } else if (c == ' ' || c == '\t') {
            if (have || !cur.empty()) out.push_back(std::move(cur));
            cur.clear();
            have = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quote) throw ConfigError("unterminated quote in backend command");
    if (have || !cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace divscale
