// Line-delimited TCP transport. A server hosts a world of local agents;
// each accepted connection becomes an agent session after a (hello <name>)
// handshake, and from then on speaks one canonical message per line in each
// direction. Connection loss closes the session but local conversation state
// with that partner is kept, so the agent can resume a returning peer.
#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "parley/world.hpp"

namespace parley {

struct TcpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 0;
};

inline Endpoint parse_endpoint(const std::string& text) {
  Endpoint ep;
  auto colon = text.rfind(':');
  if (colon == std::string::npos) throw TcpError("endpoint must be host:port, got " + text);
  std::string host = text.substr(0, colon);
  if (!host.empty()) ep.host = host == "localhost" ? "127.0.0.1" : host;
  ep.port = static_cast<uint16_t>(std::stoi(text.substr(colon + 1)));
  return ep;
}

namespace net_detail {

inline void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return;  // peer gone; caller notices on the next read
    off += static_cast<std::size_t>(n);
  }
}

inline void write_line(int fd, const std::string& line) { write_all(fd, line + "\n"); }

}  // namespace net_detail

class TcpServer {
 public:
  TcpServer(World& world, const Endpoint& ep) : world_(world) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw TcpError("socket() failed");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
      throw TcpError("cannot parse host " + ep.host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw TcpError("bind failed on " + ep.host + ":" + std::to_string(ep.port));
    if (::listen(listen_fd_, 8) != 0) throw TcpError("listen failed");
    sockaddr_in bound{};
    socklen_t len = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);
  }

  ~TcpServer() {
    for (auto& [fd, session] : sessions_) {
      if (!session->name.empty()) world_.bus().remove(session->name);
      ::close(fd);
    }
    ::close(listen_fd_);
  }

  uint16_t port() const { return port_; }
  World& world() { return world_; }

  // One transport round: accept connections and read what is available.
  // Each delivered line runs the local agents to quiescence before the next
  // line is even looked at, so two messages arriving in one read batch
  // behave exactly like two separate in-process turns. Remote-addressed
  // messages are written inline through the session sinks during delivery.
  void poll_once(int timeout_ms = 50) {
    std::vector<pollfd> fds;
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const auto& [fd, session] : sessions_) fds.push_back({fd, POLLIN, 0});
    int ready = ::poll(fds.data(), fds.size(), timeout_ms);
    if (ready <= 0) return;

    if (fds[0].revents & POLLIN) {
      int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        auto session = std::make_unique<Session>();
        session->server = this;
        session->fd = fd;
        sessions_.emplace(fd, std::move(session));
      }
    }
    std::vector<int> closed;
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      auto it = sessions_.find(fds[i].fd);
      if (it == sessions_.end()) continue;
      if (!read_available(*it->second)) closed.push_back(fds[i].fd);
    }
    for (int fd : closed) close_session(fd);
  }

 private:
  struct Session : MessageSink {
    TcpServer* server = nullptr;
    int fd = -1;
    std::string name;  // empty until hello
    std::string inbuf;
    void accept(const Message& msg) override { net_detail::write_line(fd, encode(msg)); }
  };

  bool read_available(Session& session) {
    char buf[4096];
    ssize_t n = ::recv(session.fd, buf, sizeof buf, 0);
    if (n <= 0) return false;
    session.inbuf.append(buf, static_cast<std::size_t>(n));
    std::size_t at;
    while ((at = session.inbuf.find('\n')) != std::string::npos) {
      std::string line = session.inbuf.substr(0, at);
      session.inbuf.erase(0, at + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (!handle_line(session, line)) return false;
    }
    return true;
  }

  // Returns false when the session must be closed.
  bool handle_line(Session& session, const std::string& line) {
    std::string who = session.name.empty() ? "unknown" : session.name;
    if (session.name.empty()) {
      try {
        Value v = read(line);
        if (!v.is_list() || v.items().size() != 2 || !v.items()[0].is_sym("hello") ||
            !v.items()[1].is_sym())
          throw ParseError("not a hello", 0, 1, 1);
        std::string name = v.items()[1].sym_name();
        if (world_.bus().known(name)) {
          net_detail::write_line(
              session.fd, encode(Message{"answer", "server", name,
                                         read("(error duplicate-name)")}));
          return false;
        }
        world_.bus().add(name, &session);
        session.name = name;
        return true;
      } catch (const ParseError&) {
        net_detail::write_line(session.fd,
                               encode(Message{"answer", "server", who,
                                              read("(error malformed)")}));
        return true;
      }
    }
    try {
      Message msg = decode(line);
      world_.bus().deliver(msg);
      world_.run_round_robin();
    } catch (const MessageError&) {
      net_detail::write_line(session.fd, encode(Message{"answer", "server", who,
                                                        read("(error malformed)")}));
    }
    return true;
  }

  void close_session(int fd) {
    auto it = sessions_.find(fd);
    if (it == sessions_.end()) return;
    if (!it->second->name.empty()) world_.bus().remove(it->second->name);
    ::close(fd);
    sessions_.erase(it);
  }

  World& world_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::map<int, std::unique_ptr<Session>> sessions_;
};

class TcpClient {
 public:
  TcpClient(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TcpError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1)
      throw TcpError("cannot parse host " + ep.host);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
      throw TcpError("connect to " + ep.host + ":" + std::to_string(ep.port) + " failed");
  }

  ~TcpClient() { close(); }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  bool connected() const { return fd_ >= 0; }

  void hello(const std::string& name) { send_line("(hello " + name + ")"); }
  void send(const Message& msg) { send_line(encode(msg)); }
  void send_line(const std::string& line) { net_detail::write_line(fd_, line); }

  std::optional<std::string> read_line(int timeout_ms = 2000) {
    while (true) {
      std::size_t at = inbuf_.find('\n');
      if (at != std::string::npos) {
        std::string line = inbuf_.substr(0, at);
        inbuf_.erase(0, at + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        return line;
      }
      pollfd pfd{fd_, POLLIN, 0};
      int ready = ::poll(&pfd, 1, timeout_ms);
      if (ready <= 0) return std::nullopt;
      char buf[4096];
      ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
      if (n <= 0) {
        close();
        return std::nullopt;
      }
      inbuf_.append(buf, static_cast<std::size_t>(n));
    }
  }

  std::optional<Message> read_message(int timeout_ms = 2000) {
    auto line = read_line(timeout_ms);
    if (!line) return std::nullopt;
    return decode(*line);
  }

 private:
  int fd_ = -1;
  std::string inbuf_;
};

}  // namespace parley
