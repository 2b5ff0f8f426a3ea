#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace divscale {

/// Child process with line-oriented pipes on stdin/stdout. stderr is inherited.
/// The child is killed and reaped on destruction if still running.
class ChildProcess {
public:
    // Throws TransportError if the executable cannot be started.
    explicit ChildProcess(const std::vector<std::string>& argv);
    ~ChildProcess();

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    // Writes `line` plus '\n'. Throws TransportError if the pipe is closed.
    void write_line(std::string_view line);

    // Next line without its terminator; nullopt on EOF. Throws TransportError
    // when `timeout` elapses first. A zero timeout waits forever.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout = std::chrono::milliseconds{0});

    void close_stdin();
    // Waits for exit and returns the exit status (128 + signal if signalled).
    int wait();
    void kill();
    bool running() const noexcept { return pid_ > 0; }
    int pid() const noexcept { return pid_; }

private:
    int pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    std::string buffer_;
    bool eof_ = false;
    int exit_status_ = -1;
};

}  // namespace divscale
