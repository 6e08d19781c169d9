#include "doctest.h"

#include "chairside/remote_gateway.hpp"

using namespace chairside;
using namespace chairside::remote;
using nlohmann::json;

namespace {

struct Client {
  RemoteGateway& gw;
  ClientId id;
  std::string session;
  std::int64_t seq = 0;

  explicit Client(RemoteGateway& g) : gw(g), id(g.connect()) {}

  void send(MessageKind kind, json payload, std::optional<std::int64_t> at = std::nullopt) {
    const std::int64_t s = at ? *at : seq;
    seq = s + 1;
    gw.receive(id, encode({kind, s, session, std::move(payload)}));
  }
  std::vector<Message> inbox() {
    std::vector<Message> out;
    for (const auto& line : gw.take_outbox(id)) out.push_back(decode(line));
    return out;
  }
  Message one() {
    auto all = inbox();
    REQUIRE(all.size() == 1);
    return all.front();
  }
  void hello(const std::string& token = "tok") {
    send(MessageKind::Control, {{"type", "hello"}, {"token", token}});
    const Message m = one();
    REQUIRE(m.kind == MessageKind::Ack);
    session = m.payload["session_id"];
  }
};

GatewayConfig config() { return {{"tok", "other"}, 2.0}; }

}  // namespace

TEST_SUITE("gateway") {
  TEST_CASE("hello with a valid token opens a session") {
    RemoteGateway gw(config());
    Client c(gw);
    c.send(MessageKind::Control, {{"type", "hello"}, {"token", "tok"}});
    const Message m = c.one();
    CHECK(m.kind == MessageKind::Ack);
    CHECK(m.payload["ack_seq"] == 0);
    CHECK_FALSE(m.payload["session_id"].get<std::string>().empty());
    CHECK_FALSE(gw.should_close(c.id));
    CHECK(gw.session_count() == 1);
  }

  TEST_CASE("bad token or a non-hello first message closes the connection") {
    RemoteGateway gw(config());
    Client c(gw);
    c.send(MessageKind::Control, {{"type", "hello"}, {"token", "nope"}});
    const Message m = c.one();
    CHECK(m.kind == MessageKind::Error);
    CHECK(m.payload["message"] == "invalid token");
    CHECK(gw.should_close(c.id));

    Client d(gw);
    d.send(MessageKind::Command, {{"tab", "base"}, {"action", "rotate"}, {"magnitude", 1}});
    CHECK(d.one().kind == MessageKind::Error);
    CHECK(gw.should_close(d.id));
  }

  TEST_CASE("only one client holds control") {
    RemoteGateway gw(config());
    Client a(gw);
    Client b(gw);
    a.hello();
    b.hello("other");
    a.send(MessageKind::Control, {{"type", "claim"}});
    CHECK(a.one().kind == MessageKind::Ack);
    b.send(MessageKind::Control, {{"type", "claim"}});
    const Message m = b.one();
    CHECK(m.kind == MessageKind::Error);
    CHECK(m.payload["message"] == "control held");
    CHECK(gw.controller() == a.id);
  }

  TEST_CASE("commands need control") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    c.send(MessageKind::Command, {{"tab", "base"}, {"action", "rotate"}, {"magnitude", 1}});
    CHECK(c.one().payload["message"] == "control not held");
    CHECK(gw.take_commands().empty());
  }

  TEST_CASE("commands are taken in seq order and acked") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    c.send(MessageKind::Control, {{"type", "claim"}});
    c.inbox();
    c.send(MessageKind::Command, {{"tab", "base"}, {"action", "rotate"}, {"magnitude", -1}});
    c.send(MessageKind::Command, {{"tab", "camera"}, {"action", "pan"}, {"magnitude", 5}});
    const auto cmds = gw.take_commands();
    REQUIRE(cmds.size() == 2);
    CHECK(cmds[0].seq < cmds[1].seq);
    CHECK(cmds[1].command.tab == Tab::Camera);
    CommandOutcome ok;
    ok.accepted = true;
    ok.clamped = true;
    gw.complete(cmds[0], ok);
    const Message ack = c.one();
    CHECK(ack.kind == MessageKind::Ack);
    CHECK(ack.payload["ack_seq"] == cmds[0].seq);
    CHECK(ack.payload["clamped"] == true);
    CommandOutcome no;
    no.error = "not in remote mode";
    gw.complete(cmds[1], no);
    CHECK(c.one().payload["message"] == "not in remote mode");
  }

  TEST_CASE("stale and skipped sequence numbers are rejected") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    c.send(MessageKind::Control, {{"type", "claim"}});
    c.inbox();
    const json rot = {{"tab", "base"}, {"action", "rotate"}, {"magnitude", 1}};
    c.send(MessageKind::Command, rot, 1);
    Message m = c.one();
    CHECK(m.kind == MessageKind::Error);
    CHECK(m.payload["message"] == "out-of-order seq");
    c.send(MessageKind::Command, rot, 5);
    m = c.one();
    CHECK(m.payload["message"] == "seq gap: expected 2");
    CHECK(gw.take_commands().empty());
    // The sender resynchronises on the rejected number.
    c.send(MessageKind::Command, rot, 6);
    CHECK(gw.take_commands().size() == 1);
  }

  TEST_CASE("release frees control and raises one release event") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    c.send(MessageKind::Control, {{"type", "claim"}});
    c.inbox();
    c.send(MessageKind::Control, {{"type", "release"}});
    Message m = c.one();
    CHECK(m.kind == MessageKind::Ack);
    CHECK(m.payload["noop"] == false);
    CHECK_FALSE(gw.controller());
    c.send(MessageKind::Control, {{"type", "release"}});
    m = c.one();
    CHECK(m.kind == MessageKind::Ack);
    CHECK(m.payload["noop"] == true);
    const auto events = gw.take_events();
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == fsm::EventKind::RemoteRelease);
  }

  TEST_CASE("disconnect without release counts as release after the grace period") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    c.send(MessageKind::Control, {{"type", "claim"}});
    c.inbox();
    gw.disconnect(c.id);
    gw.tick(10.0);
    CHECK(gw.take_events().empty());
    gw.tick(11.9);
    CHECK(gw.take_events().empty());
    CHECK(gw.controller() == c.id);
    gw.tick(12.0);
    const auto events = gw.take_events();
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == fsm::EventKind::RemoteRelease);
    CHECK_FALSE(gw.controller());
  }

  TEST_CASE("unknown kinds get an error and the session stays up") {
    RemoteGateway gw(config());
    Client c(gw);
    c.hello();
    gw.receive(c.id, R"({"kind":"video","payload":{},"protocol_version":1,"seq":1,"session":")" + c.session + "\"}\n");
    const Message m = c.one();
    CHECK(m.kind == MessageKind::Error);
    CHECK(m.payload["field"] == "kind");
    CHECK_FALSE(gw.should_close(c.id));
    c.send(MessageKind::Control, {{"type", "claim"}}, 1);
    CHECK(c.one().kind == MessageKind::Ack);
  }

  TEST_CASE("state goes to every authenticated client") {
    RemoteGateway gw(config());
    Client a(gw);
    Client b(gw);
    Client anon(gw);
    a.hello();
    b.hello();
    gw.broadcast_state({{"time", 1.0}});
    CHECK(a.one().kind == MessageKind::State);
    CHECK(b.one().kind == MessageKind::State);
    CHECK(anon.inbox().empty());
    gw.broadcast_state({{"time", 1.1}});
    const Message m = a.one();
    CHECK(m.seq == 3);  // hello ack, then two states
  }
}
