#pragma once

// Line protocol for evaluating the target in a separate process.
//
//   client -> server   HELLO m=<dim>
//   server -> client   READY
//   client -> server   EVAL x0 x1 ... x{m-1}     (shortest round-trip decimals)
//   server -> client   <decimal value> | ERROR <text>
//
// UTF-8, LF-terminated, one request in flight. The session ends when the
// client closes its end.

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "annr/decimal.hpp"
#include "annr/engine.hpp"
#include "annr/errors.hpp"
#include "annr/geometry.hpp"

namespace annr {

inline std::string format_hello(std::size_t dim) { return "HELLO m=" + std::to_string(dim); }

inline std::string format_eval_request(const Point& x) {
    std::string line = "EVAL";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        line += ' ';
        line += format_double(x[i]);
    }
    return line;
}

/// Coordinates of an EVAL line; nullopt if malformed or of the wrong size.
inline std::optional<Point> parse_eval_request(std::string_view line, std::size_t dim) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.substr(0, 4) != "EVAL") return std::nullopt;
    line.remove_prefix(4);
    std::vector<double> coords;
    while (!line.empty()) {
        if (line.front() != ' ') return std::nullopt;
        line.remove_prefix(1);
        const auto next = line.find(' ');
        const auto tok = line.substr(0, next);
        const auto v = parse_double(tok);
        if (!v) return std::nullopt;
        coords.push_back(*v);
        line = next == std::string_view::npos ? std::string_view{} : line.substr(next);
    }
    if (coords.size() != dim) return std::nullopt;
    return Eigen::Map<const Eigen::VectorXd>(coords.data(), static_cast<Eigen::Index>(dim));
}

/// Value carried by a response line; throws EvaluationError with the raw
/// line for ERROR replies, garbage, or non-finite numbers.
inline double parse_eval_response(const std::string& line) {
    std::string_view s = line;
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    if (s.substr(0, 5) == "ERROR") throw EvaluationError("evaluator reported an error", line);
    const auto v = parse_double(s);
    if (!v) throw EvaluationError("malformed evaluator response", line);
    if (!std::isfinite(*v)) throw EvaluationError("evaluator returned a non-finite value", line);
    return *v;
}

/// Server side of the protocol over a pair of streams; used by stub
/// evaluators. Returns when the input ends.
template <class Fn>
void serve_protocol(std::istream& in, std::ostream& out, std::size_t dim, Fn&& fn) {
    std::string line;
    if (!std::getline(in, line)) return;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != format_hello(dim)) {
        out << "ERROR expected '" << format_hello(dim) << "'\n" << std::flush;
        return;
    }
    out << "READY\n" << std::flush;
    while (std::getline(in, line)) {
        const auto x = parse_eval_request(line, dim);
        if (!x) {
            out << "ERROR malformed request\n" << std::flush;
            continue;
        }
        try {
            out << format_double(fn(*x)) << '\n' << std::flush;
        } catch (const std::exception& e) {
            out << "ERROR " << e.what() << '\n' << std::flush;
        }
    }
}

/// Client end: spawns the evaluator command with a socket pair wired to its
/// stdin/stdout and performs the handshake.
class ExternalEvaluator {
public:
    ExternalEvaluator(std::vector<std::string> argv, std::size_t dim,
                      std::chrono::milliseconds timeout = std::chrono::seconds(60))
        : dim_(dim), timeout_(timeout) {
        if (argv.empty()) throw ConfigError("external evaluator command is empty");
        int fds[2];
        if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
            throw EvaluationError(std::string("socketpair failed: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            ::close(fds[0]);
            ::close(fds[1]);
            throw EvaluationError(std::string("fork failed: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(fds[1], STDIN_FILENO);
            ::dup2(fds[1], STDOUT_FILENO);
            std::vector<char*> args;
            for (auto& a : argv) args.push_back(a.data());
            args.push_back(nullptr);
            ::execvp(args[0], args.data());
            ::_exit(127);
        }
        ::close(fds[1]);
        fd_ = fds[0];
        try {
            send_line(format_hello(dim_));
            const std::string reply = read_line();
            if (reply != "READY" && reply != "READY\r") {
                throw EvaluationError("evaluator handshake failed", reply);
            }
        } catch (...) {
            shutdown();
            throw;
        }
    }

    ExternalEvaluator(const ExternalEvaluator&) = delete;
    ExternalEvaluator& operator=(const ExternalEvaluator&) = delete;

    ~ExternalEvaluator() { shutdown(); }

    std::size_t dim() const { return dim_; }

    double evaluate(const Point& x) {
        if (static_cast<std::size_t>(x.size()) != dim_) throw InvalidInput("evaluation point dimension mismatch");
        if (!x.allFinite()) throw InvalidInput("evaluation point must be finite");
        send_line(format_eval_request(x));
        return parse_eval_response(read_line());
    }

private:
    void shutdown() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
        if (pid_ > 0) {
            int status = 0;
            // The child sees EOF and exits; give it a moment before killing it.
            for (int i = 0; i < 100; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) != 0) {
                    pid_ = -1;
                    return;
                }
                ::usleep(10000);
            }
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
        pid_ = -1;
    }

    void send_line(const std::string& line) {
        const std::string data = line + '\n';
        std::size_t sent = 0;
        while (sent < data.size()) {
            const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw EvaluationError("evaluator channel closed while sending");
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    std::string read_line() {
        const auto deadline = std::chrono::steady_clock::now() + timeout_;
        while (true) {
            const auto nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) throw EvaluationError("evaluator timed out", buffer_);
            pollfd pfd{fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready < 0) {
                if (errno == EINTR) continue;
                throw EvaluationError(std::string("poll failed: ") + std::strerror(errno), buffer_);
            }
            if (ready == 0) continue;
            char chunk[4096];
            const ssize_t n = ::read(fd_, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw EvaluationError("evaluator channel read failed", buffer_);
            }
            if (n == 0) throw EvaluationError("evaluator closed the channel", buffer_);
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    std::size_t dim_;
    std::chrono::milliseconds timeout_;
    int fd_ = -1;
    pid_t pid_ = -1;
    std::string buffer_;
};

/// Objective backed by an external evaluator process.
inline Objective external_objective(std::shared_ptr<ExternalEvaluator> channel) {
    return [channel = std::move(channel)](const Point& x) { return channel->evaluate(x); };
}

}  // namespace annr
