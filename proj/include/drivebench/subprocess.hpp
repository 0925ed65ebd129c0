// Copyright 2026 The DriveBench Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// A child process with line-oriented pipes on stdin/stdout (POSIX).

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drivebench/errors.hpp"

namespace drivebench {

/// Splits a command line into argv: whitespace separated, with single quotes,
/// double quotes and backslash escapes.
inline std::vector<std::string> split_command_line(std::string_view cmd) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false;
  char quote = 0;
  for (std::size_t i = 0; i < cmd.size(); ++i) {
    const char c = cmd[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < cmd.size()) {
        cur.push_back(cmd[++i]);
      } else {
        cur.push_back(c);
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == '\\' && i + 1 < cmd.size()) {
      cur.push_back(cmd[++i]);
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else {
      cur.push_back(c);
      in_token = true;
    }
  }
  if (quote) throw ConfigError("unterminated quote in command line");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

class ChildProcess {
 public:
  ChildProcess() = default;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ChildProcess(ChildProcess&& o) noexcept { *this = std::move(o); }
  ChildProcess& operator=(ChildProcess&& o) noexcept {
    if (this != &o) {
      terminate();
      pid_ = std::exchange(o.pid_, -1);
      in_fd_ = std::exchange(o.in_fd_, -1);
      out_fd_ = std::exchange(o.out_fd_, -1);
      buffer_ = std::move(o.buffer_);
    }
    return *this;
  }
  ~ChildProcess() { terminate(); }

  /// Starts argv[0] via PATH lookup. Throws PredictorLaunchError if the
  /// program cannot be executed.
  static ChildProcess spawn(const std::vector<std::string>& argv) {
    if (argv.empty()) throw PredictorLaunchError("empty predictor command");
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2], status[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0 || ::pipe2(from_child, O_CLOEXEC) != 0 || ::pipe2(status, O_CLOEXEC) != 0)
      throw PredictorLaunchError(std::string("pipe failed: ") + std::strerror(errno));

    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) throw PredictorLaunchError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execvp(args[0], args.data());
      const int err = errno;
      [[maybe_unused]] auto n = ::write(status[1], &err, sizeof(err));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::close(status[1]);
    int child_errno = 0;
    const auto n = ::read(status[0], &child_errno, sizeof(child_errno));
    ::close(status[0]);
    ChildProcess p;
    p.pid_ = pid;
    p.in_fd_ = to_child[1];
    p.out_fd_ = from_child[0];
    if (n == static_cast<ssize_t>(sizeof(child_errno))) {
      p.terminate();
      throw PredictorLaunchError("cannot execute '" + argv[0] + "': " + std::strerror(child_errno));
    }
    return p;
  }

  bool running() const noexcept { return pid_ > 0; }

  /// Writes one line. Throws PredictorCrashed if the pipe is closed.
  void write_line(std::string_view line) {
    std::string buf(line);
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const auto n = ::write(in_fd_, buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorCrashed(std::string("predictor stdin closed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// Reads one line, waiting at most `timeout`. nullopt on timeout; throws
  /// PredictorCrashed on end of stream.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return std::nullopt;
      pollfd pfd{out_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw PredictorCrashed(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) return std::nullopt;
      char chunk[4096];
      const auto n = ::read(out_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw PredictorCrashed(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw PredictorCrashed("predictor closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Closes stdin and waits up to `grace` for a clean exit, then kills.
  void close_and_wait(std::chrono::milliseconds grace) {
    if (pid_ <= 0) return;
    close_fd(in_fd_);
    const auto deadline = std::chrono::steady_clock::now() + grace;
    while (std::chrono::steady_clock::now() < deadline) {
      int st = 0;
      if (::waitpid(pid_, &st, WNOHANG) == pid_) {
        pid_ = -1;
        close_fd(out_fd_);
        return;
      }
      ::usleep(2000);
    }
    terminate();
  }

  void terminate() noexcept {
    close_fd(in_fd_);
    close_fd(out_fd_);
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int st = 0;
      ::waitpid(pid_, &st, 0);
      pid_ = -1;
    }
    buffer_.clear();
  }

 private:
  static void close_fd(int& fd) noexcept {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }

  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

}  // namespace drivebench
