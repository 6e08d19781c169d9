#include "chairside/remote_gateway.hpp"

namespace chairside::remote {

using nlohmann::json;

RemoteGateway::RemoteGateway(GatewayConfig config) : config_(std::move(config)) {}

ClientId RemoteGateway::connect() {
  std::lock_guard lock(mutex_);
  const ClientId id = next_id_++;
  clients_.emplace(id, Client{});
  return id;
}

void RemoteGateway::send(ClientId, Client& client, MessageKind kind, json payload) {
  Message m;
  m.kind = kind;
  m.seq = ++client.out_seq;
  m.session = client.session;
  m.payload = std::move(payload);
  client.outbox.push_back(encode(m));
}

void RemoteGateway::send_error(ClientId id, Client& client, const std::string& message, const std::string& field,
                               std::optional<std::int64_t> ack_seq) {
  json payload = {{"message", message}};
  if (!field.empty()) payload["field"] = field;
  if (ack_seq) payload["ack_seq"] = *ack_seq;
  send(id, client, MessageKind::Error, std::move(payload));
}

void RemoteGateway::receive(ClientId id, std::string_view line) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  if (it == clients_.end() || it->second.closing) return;
  Client& client = it->second;

  Message message;
  try {
    message = decode(line);
  } catch (const ProtocolError& e) {
    send_error(id, client, e.what(), e.field(), std::nullopt);
    if (!client.authenticated) client.closing = true;
    return;
  }

  if (!client.authenticated) {
    handle_hello(id, client, message);
    return;
  }
  if (message.session != client.session) {
    send_error(id, client, "unknown session", "session", message.seq);
    return;
  }
  if (message.seq <= client.last_in_seq) {
    send_error(id, client, "out-of-order seq", "seq", message.seq);
    return;
  }
  if (message.seq != client.last_in_seq + 1) {
    const std::int64_t expected = client.last_in_seq + 1;
    client.last_in_seq = message.seq;
    send_error(id, client, "seq gap: expected " + std::to_string(expected), "seq", message.seq);
    return;
  }
  client.last_in_seq = message.seq;

  switch (message.kind) {
    case MessageKind::Control:
      handle_control(id, client, message);
      return;
    case MessageKind::Command:
      if (controller_ != id) {
        send_error(id, client, "control not held", "", message.seq);
        return;
      }
      try {
        commands_.push_back({id, message.seq, parse_operator_command(message.payload)});
      } catch (const ProtocolError& e) {
        send_error(id, client, e.what(), e.field(), message.seq);
      }
      return;
    default:
      send_error(id, client, "unexpected kind '" + std::string(to_string(message.kind)) + "'", "kind",
                 message.seq);
      return;
  }
}

void RemoteGateway::handle_hello(ClientId id, Client& client, const Message& message) {
  const bool is_hello = message.kind == MessageKind::Control && message.payload.value("type", "") == "hello";
  if (!is_hello) {
    send_error(id, client, "first message must be control/hello", "kind", message.seq);
    client.closing = true;
    return;
  }
  const auto token = message.payload.value("token", "");
  if (!config_.tokens.contains(token)) {
    send_error(id, client, "invalid token", "token", message.seq);
    client.closing = true;
    return;
  }
  client.authenticated = true;
  client.session = "s" + std::to_string(id);
  client.last_in_seq = message.seq;
  send(id, client, MessageKind::Ack, {{"ack_seq", message.seq}, {"type", "hello"}, {"session_id", client.session}});
}

void RemoteGateway::handle_control(ClientId id, Client& client, const Message& message) {
  const auto type = message.payload.value("type", "");
  if (type == "claim") {
    if (controller_ && *controller_ != id) {
      send_error(id, client, "control held", "", message.seq);
      return;
    }
    controller_ = id;
    send(id, client, MessageKind::Ack, {{"ack_seq", message.seq}, {"type", "claim"}});
  } else if (type == "release") {
    const bool held = controller_ == id;
    if (held) release_control(id);
    send(id, client, MessageKind::Ack, {{"ack_seq", message.seq}, {"type", "release"}, {"noop", !held}});
  } else if (type == "hello") {
    send_error(id, client, "already authenticated", "type", message.seq);
  } else {
    send_error(id, client, "unknown control type '" + type + "'", "type", message.seq);
  }
}

void RemoteGateway::release_control(ClientId id) {
  if (controller_ != id) return;
  controller_.reset();
  std::erase_if(commands_, [id](const PendingCommand& c) { return c.client == id; });
  events_.push_back(fsm::Event::remote_release());
}

void RemoteGateway::disconnect(ClientId id) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  if (it == clients_.end()) return;
  if (controller_ == id) {
    it->second.connected = false;
    it->second.closing = true;
    it->second.outbox.clear();
  } else {
    clients_.erase(it);
  }
}

std::vector<std::string> RemoteGateway::take_outbox(ClientId id) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  if (it == clients_.end() || !it->second.connected) return {};
  std::vector<std::string> out(it->second.outbox.begin(), it->second.outbox.end());
  it->second.outbox.clear();
  return out;
}

bool RemoteGateway::should_close(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  return it == clients_.end() || it->second.closing;
}

std::vector<PendingCommand> RemoteGateway::take_commands() {
  std::lock_guard lock(mutex_);
  std::vector<PendingCommand> out;
  out.swap(commands_);
  return out;
}

void RemoteGateway::complete(const PendingCommand& command, const CommandOutcome& outcome) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(command.client);
  if (it == clients_.end() || !it->second.connected) return;
  Client& client = it->second;
  if (!outcome.accepted) {
    send_error(command.client, client, outcome.error, "", command.seq);
    return;
  }
  json payload = {{"ack_seq", command.seq}, {"type", "command"}, {"clamped", outcome.clamped}};
  if (outcome.attached) payload["attached"] = *outcome.attached;
  if (outcome.released) payload["released"] = *outcome.released;
  send(command.client, client, MessageKind::Ack, std::move(payload));
}

void RemoteGateway::broadcast_state(const json& payload) {
  std::lock_guard lock(mutex_);
  for (auto& [id, client] : clients_) {
    if (client.authenticated && client.connected && !client.closing) send(id, client, MessageKind::State, payload);
  }
}

void RemoteGateway::tick(double now) {
  std::lock_guard lock(mutex_);
  for (auto it = clients_.begin(); it != clients_.end();) {
    Client& client = it->second;
    if (client.connected) {
      ++it;
      continue;
    }
    if (!client.disconnected_at) client.disconnected_at = now;
    if (now - *client.disconnected_at >= config_.grace_seconds) {
      release_control(it->first);
      it = clients_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<fsm::Event> RemoteGateway::take_events() {
  std::lock_guard lock(mutex_);
  std::vector<fsm::Event> out;
  out.swap(events_);
  return out;
}

std::optional<ClientId> RemoteGateway::controller() const {
  std::lock_guard lock(mutex_);
  return controller_;
}

std::size_t RemoteGateway::session_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, c] : clients_) n += c.authenticated && c.connected ? 1 : 0;
  return n;
}

}  // namespace chairside::remote
