#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include <json.hpp>

#include "camel/priors.hpp"

namespace camel {

using nlohmann::json;

namespace {

std::string clip_for_message(const std::string& line) {
  constexpr std::size_t kMax = 200;
  return line.size() <= kMax ? line : line.substr(0, kMax) + "...";
}

}  // namespace

BridgePrior::BridgePrior(const std::string& command, int obs_dim, int act_dim, BridgeOptions options)
    : command_(command), obs_dim_(obs_dim), act_dim_(act_dim), options_(std::move(options)) {
  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
    throw ProtocolError("bridge: socketpair failed: " + std::string(std::strerror(errno)));
  }
  int log_fd = -1;
  if (!options_.stderr_path.empty()) {
    log_fd = ::open(options_.stderr_path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log_fd < 0) {
      ::close(sv[0]);
      ::close(sv[1]);
      throw ProtocolError("bridge: cannot open log " + options_.stderr_path);
    }
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    if (log_fd >= 0) ::close(log_fd);
    throw ProtocolError("bridge: fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    // child: the socket end becomes both stdin and stdout
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    if (log_fd >= 0) ::dup2(log_fd, STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  if (log_fd >= 0) ::close(log_fd);
  fd_ = sv[0];
  pid_ = pid;

  try {
    send_line(json{{"hello", {{"obs_dim", obs_dim_}, {"act_dim", act_dim_}}}}.dump());
    const std::string line = read_line();
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      throw ProtocolError("bridge: malformed handshake reply: " + clip_for_message(line));
    }
    if (!reply.is_object() || !reply.contains("ready") || !reply["ready"].is_object() ||
        !reply["ready"].contains("act_dim") || !reply["ready"]["act_dim"].is_number_integer()) {
      throw ProtocolError("bridge: unexpected handshake reply: " + clip_for_message(line));
    }
    const int advertised = reply["ready"]["act_dim"].get<int>();
    if (advertised != act_dim_) {
      throw ProtocolError("bridge: policy advertises act_dim=" + std::to_string(advertised) +
                          " but the environment needs " + std::to_string(act_dim_) +
                          " (handshake: " + clip_for_message(line) + ")");
    }
  } catch (...) {
    kill_child();
    throw;
  }
}

BridgePrior::~BridgePrior() {
  try {
    close();
  } catch (...) {
    kill_child();
  }
}

void BridgePrior::send_line(const std::string& line) {
  if (fd_ < 0) throw ProtocolError("bridge: already closed");
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("bridge: policy process is not accepting input (" +
                          std::string(std::strerror(errno)) + ")");
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string BridgePrior::read_line() {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(options_.timeout_seconds);
  while (true) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (left.count() <= 0) {
      throw ProtocolError("bridge: no reply within " + std::to_string(options_.timeout_seconds) + " s");
    }
    pollfd p{fd_, POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("bridge: poll failed: " + std::string(std::strerror(errno)));
    }
    if (r == 0) continue;
    char buf[4096];
    const ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError("bridge: read failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) {
      const std::string partial = pending_.empty() ? "" : " after partial line: " + clip_for_message(pending_);
      throw ProtocolError("bridge: policy process closed its output" + partial);
    }
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

Vector BridgePrior::act(const Vector& obs) {
  if (obs.size() != obs_dim_) throw ShapeError("bridge: observation size mismatch");
  json msg;
  msg["obs"] = std::vector<double>(obs.data(), obs.data() + obs.size());
  send_line(msg.dump());
  const std::string line = read_line();

  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("bridge: malformed reply: " + clip_for_message(line));
  }
  if (!reply.is_object() || !reply.contains("act") || !reply["act"].is_array()) {
    throw ProtocolError("bridge: reply lacks an act array: " + clip_for_message(line));
  }
  const json& arr = reply["act"];
  if (static_cast<int>(arr.size()) != act_dim_) {
    throw ProtocolError("bridge: expected " + std::to_string(act_dim_) + " action entries: " +
                        clip_for_message(line));
  }
  Vector a(act_dim_);
  for (int i = 0; i < act_dim_; ++i) {
    if (!arr[static_cast<std::size_t>(i)].is_number()) {
      throw ProtocolError("bridge: non-numeric action entry: " + clip_for_message(line));
    }
    a[i] = arr[static_cast<std::size_t>(i)].get<double>();
    if (!std::isfinite(a[i])) throw ProtocolError("bridge: non-finite action entry: " + clip_for_message(line));
  }
  return a;
}

void BridgePrior::close() {
  if (pid_ < 0) return;
  try {
    send_line(json{{"bye", true}}.dump());
  } catch (const ProtocolError&) {
    // child already gone; reap below
  }
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_WR);
  }
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(options_.timeout_seconds);
  while (clock::now() < deadline) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_ || r < 0) {
      pid_ = -1;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  kill_child();
}

void BridgePrior::kill_child() {
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace camel
