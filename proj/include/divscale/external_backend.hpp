#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "divscale/backend.hpp"
#include "divscale/protocol.hpp"
#include "divscale/subprocess.hpp"

namespace divscale {

struct ExternalOptions {
    std::chrono::milliseconds handshake_timeout{10000};
    // Zero waits forever; model inference can be slow.
    std::chrono::milliseconds request_timeout{0};
    // Identical child processes; one request in flight per process.
    std::size_t processes = 1;
    // When set, every line exchanged is appended as "> line" (sent) or
    // "< line" (received). Only meaningful with a single process.
    std::ostream* transcript = nullptr;
};

/// Client for forecaster processes speaking the line protocol.
class ExternalBackend final : public Backend {
public:
    ExternalBackend(std::vector<std::string> command, ExternalOptions options = {});
    ~ExternalBackend() override;

    const BackendDescriptor& descriptor() const override { return desc_; }

    // Sends shutdown to every process and waits for them to exit. Idempotent.
    void shutdown();
    // Exit code of process `worker` after shutdown(); nullopt if it had to be killed.
    std::optional<int> exit_status(std::size_t worker = 0) const;

    // One request on the next free process; ids are assigned here.
    // Error responses are returned, not thrown.
    protocol::Response exchange(protocol::Request req) const;
    // Sends an arbitrary line and returns the raw reply line. For probing error paths.
    std::string exchange_raw(const std::string& line) const;

protected:
    CandidatePool do_forecast(const ForecastRequest& req) const override;
    Matrix do_reconstruct(const Matrix& context, double temperature, std::uint64_t seed) const override;

private:
    struct Worker {
        std::unique_ptr<ChildProcess> proc;
        bool dead = false;
        std::optional<int> status;
    };

    std::size_t acquire() const;
    void release(std::size_t i) const;
    std::string roundtrip(std::size_t worker, const std::string& line, std::uint64_t id) const;
    void record(char dir, const std::string& line) const;

    std::vector<std::string> command_;
    ExternalOptions options_;
    BackendDescriptor desc_;
    mutable std::vector<Worker> workers_;
    mutable std::mutex pool_mutex_;
    mutable std::condition_variable pool_cv_;
    mutable std::vector<std::size_t> free_;
    mutable std::atomic<std::uint64_t> next_id_{1};
    mutable std::mutex transcript_mutex_;
    bool shut_down_ = false;
};

/// Starts `command`, reads the hello line within `handshake_timeout`.
/// Throws TransportError (spawn failure, timeout, early exit) or
/// protocol::VersionMismatch.
std::unique_ptr<ExternalBackend> spawn_external(const std::vector<std::string>& command,
                                                std::chrono::milliseconds handshake_timeout,
                                                std::size_t processes = 1);

// Splits a shell-like command string on whitespace, honouring simple quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace divscale
