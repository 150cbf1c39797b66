// Copyright 2026 The slaterl Authors. All Rights Reserved.
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

// Vectorized environment over TCP. Messages are single-line JSON objects.
//
//   client: {"type":"hello","version":1}
//   server: {"type":"hello","version":1,"env":{page_size,row_width,max_pages,gamma,users}}
//   client: {"type":"reset","seed":S,"user":i}        or "context":[...]
//   server: {"type":"reset","session":T,"state":{...},"mask":[...]}
//   client: {"type":"step","session":T,"action":a}
//   server: {"type":"step","session":T,"reward":r,"done":b,"feedback":[...],"state":{...},"mask":[...]}
//   client: {"type":"batch_step","steps":[{"session":T,"action":a},...]}
//   server: {"type":"batch_step","results":[step reply or error reply, ...]}
//   client: {"type":"close","session":T}
//   server: {"type":"close","session":T}
//
// Failures come back as {"type":"error","kind":k,"message":m} and the
// connection stays open. Sessions belong to the connection that opened them.

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "slaterl/core/error.hpp"
#include "slaterl/slate_env/env.hpp"

namespace slaterl::cli {

inline constexpr int kProtocolVersion = 1;

using nlohmann::json;

inline json state_to_json(const SlateState& s) {
  json hist = json::array();
  for (const auto& p : s.history) hist.push_back({{"items", p.items}, {"feedback", p.feedback}});
  return {{"user_context", s.user_context}, {"chosen_items", s.chosen_items},
          {"page_index", s.page_index},     {"step_index", s.step_index},
          {"history", hist},                {"finished", s.finished}};
}

inline SlateState state_from_json(const json& j) {
  SlateState s;
  s.user_context = j.at("user_context").get<std::vector<double>>();
  s.chosen_items = j.at("chosen_items").get<std::vector<ItemId>>();
  s.page_index = j.at("page_index").get<std::size_t>();
  s.step_index = j.at("step_index").get<std::size_t>();
  for (const auto& p : j.at("history")) {
    s.history.push_back({p.at("items").get<std::vector<ItemId>>(), p.at("feedback").get<Feedback>()});
  }
  s.finished = j.at("finished").get<bool>();
  return s;
}

inline json error_reply(ErrorKind kind, const std::string& message) {
  return {{"type", "error"}, {"kind", std::string(to_string(kind))}, {"message", message}};
}

namespace detail {

inline void send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("send failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

/// Buffered line reader over a socket; false at end of stream.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}
  bool next(std::string& line) {
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n == 0) return false;
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buf_;
};

}  // namespace detail

/// Serves one environment; model, catalog and users are shared read-only.
class EnvServer {
 public:
  EnvServer(const SlateEnv& env, std::vector<std::vector<double>> users)
      : env_(&env), users_(std::move(users)) {}
  ~EnvServer() { stop(); }
  EnvServer(const EnvServer&) = delete;
  EnvServer& operator=(const EnvServer&) = delete;

  /// Binds and starts accepting in the background. Port 0 picks a free one.
  std::uint16_t start(const std::string& host, std::uint16_t port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw IoError("socket failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      throw ConfigError("bad bind address '" + host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
        ::listen(listen_fd_, 64) < 0) {
      const std::string why = std::strerror(errno);
      ::close(listen_fd_);
      listen_fd_ = -1;
      throw IoError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
    return port_;
  }

  std::uint16_t port() const { return port_; }

  /// Stops accepting, closes live connections and joins every thread.
  void stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    ::close(listen_fd_);
    listen_fd_ = -1;
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto& t : workers) t.join();
  }

  /// Handles one request line of a connection; exposed for tests.
  struct Connection {
    std::map<std::string, std::unique_ptr<EnvSession>> sessions;
    std::size_t next = 0;
    bool greeted = false;
  };

  json handle(Connection& c, const std::string& line) const {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception& e) {
      return error_reply(ErrorKind::protocol, std::string("malformed message: ") + e.what());
    }
    try {
      if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
        throw ProtocolError("message needs a string field 'type'");
      }
      const std::string type = msg["type"];
      if (type == "hello") {
        const int v = msg.at("version").get<int>();
        if (v != kProtocolVersion) {
          throw ProtocolError("unsupported protocol version " + std::to_string(v));
        }
        c.greeted = true;
        const auto& cfg = env_->config();
        return {{"type", "hello"},
                {"version", kProtocolVersion},
                {"env",
                 {{"page_size", cfg.page_size},
                  {"row_width", cfg.row_width},
                  {"max_pages", cfg.max_pages},
                  {"gamma", cfg.gamma},
                  {"users", users_.size()}}}};
      }
      if (!c.greeted) throw ProtocolError("send hello first");
      if (type == "reset") return reset(c, msg);
      if (type == "step") return step(c, msg.at("session").get<std::string>(), msg.at("action").get<ItemId>());
      if (type == "batch_step") {
        json results = json::array();
        for (const auto& s : msg.at("steps")) {
          try {
            results.push_back(step(c, s.at("session").get<std::string>(), s.at("action").get<ItemId>()));
          } catch (const Error& e) {
            results.push_back(error_reply(e.kind(), e.what()));
          } catch (const json::exception& e) {
            results.push_back(error_reply(ErrorKind::protocol, e.what()));
          }
        }
        return {{"type", "batch_step"}, {"results", results}};
      }
      if (type == "close") {
        const std::string tok = msg.at("session").get<std::string>();
        if (!c.sessions.erase(tok)) throw ProtocolError("unknown session '" + tok + "'");
        return {{"type", "close"}, {"session", tok}};
      }
      throw ProtocolError("unknown message type '" + type + "'");
    } catch (const Error& e) {
      return error_reply(e.kind(), e.what());
    } catch (const json::exception& e) {
      return error_reply(ErrorKind::protocol, e.what());
    }
  }

 private:
  json reset(Connection& c, const json& msg) const {
    const auto seed = msg.at("seed").get<std::uint64_t>();
    std::vector<double> ctx;
    if (msg.contains("context")) {
      ctx = msg["context"].get<std::vector<double>>();
    } else {
      const auto u = msg.at("user").get<std::size_t>();
      if (u >= users_.size()) throw ProtocolError("user index out of range");
      ctx = users_[u];
    }
    auto session = std::make_unique<EnvSession>(*env_, ctx, seed);
    const std::string tok = "s" + std::to_string(c.next++);
    json reply = {{"type", "reset"},
                  {"session", tok},
                  {"state", state_to_json(session->state())},
                  {"mask", session->action_mask()}};
    c.sessions[tok] = std::move(session);
    return reply;
  }

  json step(Connection& c, const std::string& tok, ItemId action) const {
    auto it = c.sessions.find(tok);
    if (it == c.sessions.end()) throw ProtocolError("unknown session '" + tok + "'");
    EnvSession& s = *it->second;
    if (s.done()) throw ProtocolError("session '" + tok + "' is finished");
    const StepResult r = s.step(action);
    return {{"type", "step"},
            {"session", tok},
            {"reward", r.reward},
            {"done", r.done},
            {"feedback", r.feedback},
            {"state", state_to_json(r.next_state)},
            {"mask", r.done ? std::vector<ItemId>{} : s.action_mask()}};
  }

  void accept_loop() {
    while (running_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::lock_guard lock(mu_);
      open_fds_.push_back(fd);
      workers_.emplace_back([this, fd] { serve(fd); });
    }
  }

  void serve(int fd) {
    Connection c;
    detail::LineReader reader(fd);
    std::string line;
    try {
      while (reader.next(line)) {
        if (line.empty()) continue;
        detail::send_all(fd, handle(c, line).dump() + "\n");
      }
    } catch (const Error&) {
      // peer went away mid-reply; only this connection's sessions are lost
    }
    std::lock_guard lock(mu_);
    std::erase(open_fds_, fd);
    ::close(fd);
  }

  const SlateEnv* env_;
  std::vector<std::vector<double>> users_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> open_fds_;
  std::vector<std::thread> workers_;
};

/// Blocking client for EnvServer.
class EnvClient {
 public:
  struct Reset {
    std::string session;
    SlateState state;
    std::vector<ItemId> mask;
  };
  struct Step {
    std::string session;
    StepResult result;
    std::vector<ItemId> mask;
  };

  EnvClient(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError("socket failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ConfigError("bad address " + host);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
      ::close(fd_);
      throw IoError("cannot connect to " + host + ":" + std::to_string(port));
    }
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    reader_ = std::make_unique<detail::LineReader>(fd_);
    env_ = request({{"type", "hello"}, {"version", kProtocolVersion}}).at("env");
  }
  ~EnvClient() {
    if (fd_ >= 0) ::close(fd_);
  }
  EnvClient(const EnvClient&) = delete;
  EnvClient& operator=(const EnvClient&) = delete;

  const json& env_info() const { return env_; }

  /// Sends one line and returns the reply, raising errors in their kind.
  json request(const json& msg) {
    json reply = raw(msg.dump());
    if (reply.at("type") == "error") raise(reply);
    return reply;
  }

  /// Sends a raw line; the reply comes back unchecked.
  json raw(const std::string& line) {
    detail::send_all(fd_, line + "\n");
    std::string back;
    if (!reader_->next(back)) throw IoError("server closed the connection");
    return json::parse(back);
  }

  Reset reset(std::uint64_t seed, std::size_t user) {
    return parse_reset(request({{"type", "reset"}, {"seed", seed}, {"user", user}}));
  }
  Reset reset(std::uint64_t seed, const std::vector<double>& context) {
    return parse_reset(request({{"type", "reset"}, {"seed", seed}, {"context", context}}));
  }

  Step step(const std::string& session, ItemId action) {
    return parse_step(request({{"type", "step"}, {"session", session}, {"action", action}}));
  }

  /// One reply per step, in order; failed elements carry their error.
  std::vector<std::variant<Step, Error>> batch_step(
      const std::vector<std::pair<std::string, ItemId>>& steps) {
    json arr = json::array();
    for (const auto& [tok, a] : steps) arr.push_back({{"session", tok}, {"action", a}});
    const json reply = request({{"type", "batch_step"}, {"steps", arr}});
    std::vector<std::variant<Step, Error>> out;
    for (const auto& r : reply.at("results")) {
      if (r.at("type") == "error") out.emplace_back(as_error(r));
      else out.emplace_back(parse_step(r));
    }
    return out;
  }

  void close(const std::string& session) { request({{"type", "close"}, {"session", session}}); }

 private:
  static Reset parse_reset(const json& r) {
    return {r.at("session").get<std::string>(), state_from_json(r.at("state")),
            r.at("mask").get<std::vector<ItemId>>()};
  }
  static Step parse_step(const json& r) {
    Step s;
    s.session = r.at("session").get<std::string>();
    s.result.reward = r.at("reward").get<double>();
    s.result.done = r.at("done").get<bool>();
    s.result.feedback = r.at("feedback").get<Feedback>();
    s.result.next_state = state_from_json(r.at("state"));
    s.mask = r.at("mask").get<std::vector<ItemId>>();
    return s;
  }
  static ErrorKind kind_of(const std::string& k) {
    for (int i = 0; i <= static_cast<int>(ErrorKind::protocol); ++i) {
      if (to_string(static_cast<ErrorKind>(i)) == k) return static_cast<ErrorKind>(i);
    }
    return ErrorKind::protocol;
  }
  static Error as_error(const json& r) {
    return Error(kind_of(r.at("kind").get<std::string>()), r.at("message").get<std::string>());
  }
  template <ErrorKind K>
  [[noreturn]] static void throw_as(const std::string& m) {
    throw KindError<K>(m);
  }
  // rethrows with the concrete type when the kind has one
  [[noreturn]] static void raise(const json& r) {
    const Error e = as_error(r);
    const std::string m = e.what();
    switch (e.kind()) {
      case ErrorKind::schema: throw_as<ErrorKind::schema>(m);
      case ErrorKind::contract: throw_as<ErrorKind::contract>(m);
      case ErrorKind::integrity: throw_as<ErrorKind::integrity>(m);
      case ErrorKind::catalog: throw_as<ErrorKind::catalog>(m);
      case ErrorKind::config: throw_as<ErrorKind::config>(m);
      case ErrorKind::propensity: throw_as<ErrorKind::propensity>(m);
      case ErrorKind::undefined: throw_as<ErrorKind::undefined>(m);
      case ErrorKind::invalid_action: throw_as<ErrorKind::invalid_action>(m);
      case ErrorKind::size: throw_as<ErrorKind::size>(m);
      case ErrorKind::empty_data: throw_as<ErrorKind::empty_data>(m);
      case ErrorKind::io: throw_as<ErrorKind::io>(m);
      case ErrorKind::protocol: throw_as<ErrorKind::protocol>(m);
      default: throw e;
    }
  }

  int fd_ = -1;
  std::unique_ptr<detail::LineReader> reader_;
  json env_;
};

}  // namespace slaterl::cli
