#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>

#include "chairside/remote_gateway.hpp"

namespace chairside::remote {

/// TCP front end for a RemoteGateway. Each connection speaks newline-delimited
/// JSON, or the same messages as WebSocket text frames when the first bytes
/// are an HTTP upgrade request.
class RemoteServer {
 public:
  RemoteServer(RemoteGateway& gateway, std::string bind_address, std::uint16_t port);
  ~RemoteServer();
  RemoteServer(const RemoteServer&) = delete;
  RemoteServer& operator=(const RemoteServer&) = delete;

  /// Binds and starts the I/O thread. Throws std::runtime_error on failure.
  void start();
  void stop();
  /// The bound port (useful when constructed with port 0).
  std::uint16_t port() const { return port_; }

 private:
  void run();

  RemoteGateway& gateway_;
  std::string bind_address_;
  std::uint16_t port_;
  int listen_fd_ = -1;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> running_{false};
  std::thread thread_;
};

/// Sec-WebSocket-Accept value for a client key.
std::string websocket_accept_key(const std::string& client_key);

}  // namespace chairside::remote
