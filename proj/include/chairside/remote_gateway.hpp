#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chairside/fsm.hpp"
#include "chairside/protocol.hpp"

namespace chairside::remote {

using ClientId = std::uint64_t;

struct GatewayConfig {
  std::set<std::string> tokens;
  double grace_seconds = 2.0;  // disconnect without release counts as release after this
};

struct PendingCommand {
  ClientId client = 0;
  std::int64_t seq = 0;
  OperatorCommand command;
};

/// Session logic of the remote-assist service, independent of any transport.
/// The I/O side calls connect/receive/disconnect/take_outbox; the simulation
/// loop calls take_commands/complete/broadcast_state/tick/take_events. All
/// methods are thread-safe.
class RemoteGateway {
 public:
  explicit RemoteGateway(GatewayConfig config);

  ClientId connect();
  void receive(ClientId client, std::string_view line);
  void disconnect(ClientId client);

  /// Encoded outbound lines for one client, oldest first.
  std::vector<std::string> take_outbox(ClientId client);
  /// True once the client must be dropped (after its outbox is flushed).
  bool should_close(ClientId client) const;

  std::vector<PendingCommand> take_commands();
  void complete(const PendingCommand& command, const CommandOutcome& outcome);
  void broadcast_state(const nlohmann::json& payload);
  /// Advances disconnect grace timers using simulation time.
  void tick(double now);
  std::vector<fsm::Event> take_events();

  std::optional<ClientId> controller() const;
  std::size_t session_count() const;

 private:
  struct Client {
    bool authenticated = false;
    bool closing = false;
    bool connected = true;
    std::optional<double> disconnected_at;
    std::string session;
    std::int64_t last_in_seq = -1;
    std::int64_t out_seq = 0;
    std::deque<std::string> outbox;
  };

  void send(ClientId id, Client& client, MessageKind kind, nlohmann::json payload);
  void send_error(ClientId id, Client& client, const std::string& message, const std::string& field,
                  std::optional<std::int64_t> ack_seq);
  void handle_hello(ClientId id, Client& client, const Message& message);
  void handle_control(ClientId id, Client& client, const Message& message);
  void release_control(ClientId id);

  GatewayConfig config_;
  mutable std::mutex mutex_;
  std::map<ClientId, Client> clients_;
  ClientId next_id_ = 1;
  std::optional<ClientId> controller_;
  std::vector<PendingCommand> commands_;
  std::vector<fsm::Event> events_;
};

}  // namespace chairside::remote
