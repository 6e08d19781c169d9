#include "chairside/remote_server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <list>
#include <stdexcept>

namespace chairside::remote {

namespace {

constexpr std::size_t kMaxBuffered = 1 << 20;
constexpr int kPollTimeoutMs = 10;

enum class Mode { Unknown, Raw, WebSocket };

struct Connection {
  int fd = -1;
  ClientId id = 0;
  Mode mode = Mode::Unknown;
  std::string in;
  std::string out;
  std::string fragment;
  bool closing = false;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK); }

std::string ws_frame(std::string_view payload, std::uint8_t opcode = 0x1) {
  std::string frame;
  frame.push_back(static_cast<char>(0x80 | opcode));
  const std::size_t n = payload.size();
  if (n < 126) {
    frame.push_back(static_cast<char>(n));
  } else if (n < 65536) {
    frame.push_back(126);
    frame.push_back(static_cast<char>(n >> 8));
    frame.push_back(static_cast<char>(n & 0xff));
  } else {
    frame.push_back(127);
    for (int i = 7; i >= 0; --i) frame.push_back(static_cast<char>((n >> (8 * i)) & 0xff));
  }
  frame.append(payload);
  return frame;
}

std::string header_value(std::string_view request, std::string_view name) {
  std::size_t pos = 0;
  while (pos < request.size()) {
    const std::size_t end = std::min(request.find("\r\n", pos), request.size());
    const std::string_view line = request.substr(pos, end - pos);
    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos && colon == name.size() &&
        std::equal(name.begin(), name.end(), line.begin(),
                   [](char a, char b) { return std::tolower(a) == std::tolower(b); })) {
      std::string_view value = line.substr(colon + 1);
      while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
      while (!value.empty() && value.back() == ' ') value.remove_suffix(1);
      return std::string(value);
    }
    pos = end + 2;
  }
  return {};
}

void deliver_lines(RemoteGateway& gateway, ClientId id, std::string& buffer) {
  std::size_t nl;
  while ((nl = buffer.find('\n')) != std::string::npos) {
    std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) gateway.receive(id, line);
  }
}

/// Consumes complete WebSocket frames from conn.in. Returns false when the
/// peer asked to close or sent something unusable.
bool process_ws(RemoteGateway& gateway, Connection& conn) {
  std::string& in = conn.in;
  while (in.size() >= 2) {
    const auto b0 = static_cast<std::uint8_t>(in[0]);
    const auto b1 = static_cast<std::uint8_t>(in[1]);
    const bool fin = b0 & 0x80;
    const std::uint8_t opcode = b0 & 0x0f;
    const bool masked = b1 & 0x80;
    std::uint64_t len = b1 & 0x7f;
    std::size_t header = 2;
    if (len == 126) {
      if (in.size() < 4) return true;
      len = (static_cast<std::uint8_t>(in[2]) << 8) | static_cast<std::uint8_t>(in[3]);
      header = 4;
    } else if (len == 127) {
      if (in.size() < 10) return true;
      len = 0;
      for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(in[2 + i]);
      header = 10;
    }
    if (len > kMaxBuffered) return false;
    const std::size_t mask_at = header;
    if (masked) header += 4;
    if (in.size() < header + len) return true;
    std::string payload = in.substr(header, len);
    if (masked) {
      for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<char>(payload[i] ^ in[mask_at + i % 4]);
    }
    in.erase(0, header + len);

    switch (opcode) {
      case 0x0:
      case 0x1:
      case 0x2:
        conn.fragment += payload;
        if (fin) {
          conn.fragment.push_back('\n');
          deliver_lines(gateway, conn.id, conn.fragment);
          conn.fragment.clear();
        }
        break;
      case 0x8:
        conn.out += ws_frame("", 0x8);
        return false;
      case 0x9:
        conn.out += ws_frame(payload, 0xA);
        break;
      default:
        break;
    }
  }
  return true;
}

/// Returns false if the connection should be dropped.
bool process_input(RemoteGateway& gateway, Connection& conn) {
  if (conn.mode == Mode::Unknown) {
    if (conn.in.size() < 4) return true;
    if (conn.in.compare(0, 4, "GET ") != 0) {
      conn.mode = Mode::Raw;
    } else {
      const std::size_t end = conn.in.find("\r\n\r\n");
      if (end == std::string::npos) return conn.in.size() < 16384;
      const std::string request = conn.in.substr(0, end + 4);
      conn.in.erase(0, end + 4);
      const std::string key = header_value(request, "Sec-WebSocket-Key");
      if (key.empty()) {
        conn.out += "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
        return false;
      }
      conn.out += "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                  "Sec-WebSocket-Accept: " +
                  websocket_accept_key(key) + "\r\n\r\n";
      conn.mode = Mode::WebSocket;
    }
  }
  if (conn.mode == Mode::Raw) {
    deliver_lines(gateway, conn.id, conn.in);
    return conn.in.size() < kMaxBuffered;
  }
  return process_ws(gateway, conn);
}

}  // namespace

std::string websocket_accept_key(const std::string& client_key) {
  const std::string joined = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
  const int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
  return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

RemoteServer::RemoteServer(RemoteGateway& gateway, std::string bind_address, std::uint16_t port)
    : gateway_(gateway), bind_address_(std::move(bind_address)), port_(port) {}

RemoteServer::~RemoteServer() { stop(); }

void RemoteServer::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, bind_address_.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("invalid bind address '" + bind_address_ + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::runtime_error("bind " + bind_address_ + ":" + std::to_string(port_) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  set_nonblocking(listen_fd_);
  if (::pipe(wake_pipe_) != 0) throw std::runtime_error("pipe: " + std::string(std::strerror(errno)));
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void RemoteServer::stop() {
  if (!running_.exchange(false)) return;
  const char byte = 0;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &byte, 1);
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
  listen_fd_ = wake_pipe_[0] = wake_pipe_[1] = -1;
}

void RemoteServer::run() {
  std::list<Connection> conns;
  auto drop = [&](std::list<Connection>::iterator it) {
    gateway_.disconnect(it->id);
    ::close(it->fd);
    return conns.erase(it);
  };

  while (running_) {
    std::vector<pollfd> fds;
    fds.push_back({wake_pipe_[0], POLLIN, 0});
    fds.push_back({listen_fd_, POLLIN, 0});
    for (const auto& c : conns) {
      fds.push_back({c.fd, static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
    }
    if (::poll(fds.data(), fds.size(), kPollTimeoutMs) < 0 && errno != EINTR) break;
    if (!running_) break;

    if (fds[1].revents & POLLIN) {
      for (;;) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) break;
        set_nonblocking(fd);
        const int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        Connection conn;
        conn.fd = fd;
        conn.id = gateway_.connect();
        conns.push_back(std::move(conn));
      }
    }

    std::size_t index = 2;
    for (auto it = conns.begin(); it != conns.end(); ++index) {
      // Connections accepted this round have no pollfd entry yet.
      const short revents = index < fds.size() && fds[index].fd == it->fd ? fds[index].revents : 0;
      bool alive = true;
      if (revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        for (;;) {
          const ssize_t n = ::recv(it->fd, buf, sizeof buf, 0);
          if (n > 0) {
            it->in.append(buf, static_cast<std::size_t>(n));
            continue;
          }
          if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK)) alive = false;
          break;
        }
        if (!it->closing && !process_input(gateway_, *it)) it->closing = true;
      }
      if (!alive) {
        it = drop(it);
        continue;
      }
      ++it;
    }

    for (auto it = conns.begin(); it != conns.end();) {
      for (const auto& line : gateway_.take_outbox(it->id)) {
        it->out += it->mode == Mode::WebSocket ? ws_frame(line) : line;
      }
      if (gateway_.should_close(it->id)) it->closing = true;
      bool alive = true;
      while (!it->out.empty()) {
        const ssize_t n = ::send(it->fd, it->out.data(), it->out.size(), MSG_NOSIGNAL);
        if (n > 0) {
          it->out.erase(0, static_cast<std::size_t>(n));
          continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
        alive = false;
        break;
      }
      if (!alive || (it->closing && it->out.empty()) || it->out.size() > 4 * kMaxBuffered) {
        it = drop(it);
      } else {
        ++it;
      }
    }
  }
  for (auto it = conns.begin(); it != conns.end();) it = drop(it);
}

}  // namespace chairside::remote
