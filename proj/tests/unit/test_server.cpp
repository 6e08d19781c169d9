#include <atomic>
#include <chrono>
#include <thread>

#include "doctest.h"
#include "net_client.hpp"

#include "chairside/remote_server.hpp"
#include "chairside/runner.hpp"

using namespace chairside;
using namespace chairside::remote;
using nlohmann::json;

namespace {

std::string msg(MessageKind kind, std::int64_t seq, const std::string& session, json payload) {
  return encode({kind, seq, session, std::move(payload)});
}

/// Drives the gateway's outbound side the way the simulation loop would.
void pump(RemoteGateway& gw, std::atomic<bool>& stop) {
  double t = 0.0;
  while (!stop) {
    gw.tick(t);
    t += 0.05;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace

TEST_SUITE("server") {
  TEST_CASE("websocket accept key") {
    CHECK(websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");
  }

  TEST_CASE("raw socket session on an ephemeral port") {
    RemoteGateway gw({{"tok"}, 2.0});
    RemoteServer server(gw, "127.0.0.1", 0);
    server.start();
    REQUIRE(server.port() != 0);

    net::TestClient c(server.port());
    c.send_line(msg(MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "tok"}}));
    auto line = c.read_line();
    REQUIRE(line);
    const Message ack = decode(*line);
    CHECK(ack.kind == MessageKind::Ack);
    const std::string session = ack.payload["session_id"];

    // Unknown kind: error, connection stays up.
    c.send_line(R"({"kind":"video","payload":{},"protocol_version":1,"seq":1,"session":")" + session + "\"}\n");
    line = c.read_line();
    REQUIRE(line);
    CHECK(decode(*line).kind == MessageKind::Error);
    c.send_line(msg(MessageKind::Control, 1, session, {{"type", "claim"}}));
    line = c.read_line();
    REQUIRE(line);
    CHECK(decode(*line).kind == MessageKind::Ack);

    gw.broadcast_state({{"time", 0.5}});
    line = c.read_line();
    REQUIRE(line);
    CHECK(decode(*line).kind == MessageKind::State);
    server.stop();
  }

  TEST_CASE("bad token is answered and the socket closed") {
    RemoteGateway gw({{"tok"}, 2.0});
    RemoteServer server(gw, "127.0.0.1", 0);
    server.start();
    net::TestClient c(server.port());
    c.send_line(msg(MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "wrong"}}));
    const auto line = c.read_line();
    REQUIRE(line);
    CHECK(decode(*line).payload["message"] == "invalid token");
    CHECK(c.closed_by_peer());
    server.stop();
  }

  TEST_CASE("websocket clients speak the same messages") {
    RemoteGateway gw({{"tok"}, 2.0});
    RemoteServer server(gw, "127.0.0.1", 0);
    server.start();
    net::TestClient c(server.port(), true);
    CHECK(c.handshake_response().find("101") != std::string::npos);
    CHECK(c.handshake_response().find("s3pPLMBiTxaQ9kYGzzhZRbK+xOo=") != std::string::npos);
    c.send_line(msg(MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "tok"}}));
    auto line = c.read_line();
    REQUIRE(line);
    const Message ack = decode(*line);
    CHECK(ack.kind == MessageKind::Ack);
    json big = json::object();
    big["blob"] = std::string(300, 'x');
    gw.broadcast_state(big);
    line = c.read_line();
    REQUIRE(line);
    CHECK(decode(*line).payload["blob"].get<std::string>().size() == 300);
    server.stop();
  }

  TEST_CASE("disconnect while holding control releases after the grace period") {
    RemoteGateway gw({{"tok"}, 2.0});
    RemoteServer server(gw, "127.0.0.1", 0);
    server.start();
    {
      net::TestClient c(server.port());
      c.send_line(msg(MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "tok"}}));
      const std::string session = decode(*c.read_line()).payload["session_id"];
      c.send_line(msg(MessageKind::Control, 1, session, {{"type", "claim"}}));
      REQUIRE(c.read_line());
    }
    std::atomic<bool> stop{false};
    std::thread t(pump, std::ref(gw), std::ref(stop));
    bool released = false;
    for (int i = 0; i < 400 && !released; ++i) {
      for (const auto& e : gw.take_events()) released |= e.kind == fsm::EventKind::RemoteRelease;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    stop = true;
    t.join();
    CHECK(released);
    CHECK_FALSE(gw.controller());
    server.stop();
  }

  TEST_CASE("state updates keep arriving while a scenario runs in real time") {
    harness::ScenarioConfig config;
    config.duration = 4.0;
    RemoteGateway gw({{"tok"}, 2.0});
    harness::Simulation sim(config, &gw);
    RemoteServer server(gw, "127.0.0.1", 0);
    server.start();

    net::TestClient c(server.port());
    c.send_line(msg(MessageKind::Control, 0, "", {{"type", "hello"}, {"token", "tok"}}));
    REQUIRE(c.read_line());

    std::thread loop([&] {
      using clock = std::chrono::steady_clock;
      auto next = clock::now();
      while (!sim.finished()) {
        sim.step();
        next += std::chrono::milliseconds(50);
        std::this_thread::sleep_until(next);
      }
    });

    using clock = std::chrono::steady_clock;
    std::optional<clock::time_point> last;
    double worst_ms = 0.0;
    int states = 0;
    while (auto line = c.read_line(1000)) {
      const Message m = decode(*line);
      if (m.kind != MessageKind::State) continue;
      const auto now = clock::now();
      if (last) worst_ms = std::max(worst_ms, std::chrono::duration<double, std::milli>(now - *last).count());
      last = now;
      ++states;
      if (m.payload["time"].get<double>() >= config.duration - 0.2) break;
    }
    loop.join();
    server.stop();
    CHECK(states >= 30);
    CHECK(worst_ms <= 150.0);
  }
}
