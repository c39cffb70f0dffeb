/*
 * Copyright (c) 2026, the tcpconform authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <type_traits>

#include "tcpconform/socket_api.hpp"

using namespace tcpconform;

// Out-of-order calls are unrepresentable, not merely rejected: handles
// cannot be duplicated and each phase has its own type.
static_assert(!std::is_copy_constructible_v<UnconnectedSession>);
static_assert(!std::is_copy_constructible_v<ConnectedSession>);
static_assert(!std::is_copy_constructible_v<ShutdownSession>);
static_assert(!std::is_default_constructible_v<ConnectedSession>);

namespace {

constexpr int kA = Simulator::kEndpointA;
constexpr int kB = Simulator::kEndpointB;

RunOptions default_options(std::uint64_t seed = 0) {
  RunOptions options;
  options.seed = seed;
  return options;
}

Script accepting_peer(Port port) {
  Script script;
  script.push_back(ScriptOp{ScriptOpKind::Open});
  ScriptOp accept;
  accept.kind = ScriptOpKind::Accept;
  accept.port = port;
  script.push_back(accept);
  return script;
}

UnconnectedSession must_open(Simulator& sim, int ep) {
  OpenOutcome outcome =
      socket_open(sim, ep, SockType::Stream, SockProtocol::Tcp);
  REQUIRE(outcome.error == ErrorCode::NoError);
  REQUIRE(outcome.session.has_value());
  return std::move(*outcome.session);
}

ConnectedSession must_connect(Simulator& sim, Port port = 7777) {
  sim.load_script(kB, accepting_peer(port));
  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), port);
  REQUIRE(std::holds_alternative<ConnectedSession>(outcome));
  return std::move(std::get<ConnectedSession>(outcome));
}

}  // namespace

TEST_CASE("open yields a CLOSED socket; only stream TCP is accepted") {
  Simulator sim(default_options());
  UnconnectedSession session = must_open(sim, kA);
  const Socket* socket = sim.find_socket(kA, session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::Closed);
  CHECK_FALSE(socket->remote_ip.is_initialized());

  const OpenOutcome dgram =
      socket_open(sim, kA, SockType::Dgram, SockProtocol::Udp);
  CHECK(dgram.error == ErrorCode::InvalidSocket);
  CHECK_FALSE(dgram.session.has_value());

  socket_close(std::move(session));
}

TEST_CASE("successful connect produces an ESTABLISHED session") {
  Simulator sim(default_options());
  ConnectedSession session = must_connect(sim);

  const Socket* socket = sim.find_socket(kA, session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::Established);
  CHECK(socket->remote_ip == IpAddr::parse("10.0.0.2").value());
  CHECK(socket->remote_port == 7777);
  CHECK(socket->local_ip.is_initialized());

  socket_close(std::move(session));
}

TEST_CASE("failed connect hands the unconnected session back") {
  Simulator sim(default_options());
  // Nobody listens on 9999.
  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 9999);
  REQUIRE(std::holds_alternative<ConnectFailure>(outcome));
  ConnectFailure failure = std::move(std::get<ConnectFailure>(outcome));
  CHECK(failure.error == ErrorCode::Timeout);

  const Socket* socket = sim.find_socket(kA, failure.session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->sock_type == SockType::Stream);
  CHECK(socket->protocol == SockProtocol::Tcp);
  CHECK_FALSE(socket->remote_ip.is_initialized());

  socket_close(std::move(failure.session));
}

TEST_CASE("connect to an uninitialized address is refused") {
  Simulator sim(default_options());
  ConnectOutcome outcome = socket_connect(must_open(sim, kA), IpAddr{}, 7777);
  REQUIRE(std::holds_alternative<ConnectFailure>(outcome));
  CHECK(std::get<ConnectFailure>(outcome).error ==
        ErrorCode::PortUnreachable);
}

TEST_CASE("a RST during the handshake fails connect promptly") {
  Simulator sim(default_options());
  // The peer never listens; it fires a raw RST at the deterministic
  // ephemeral port of the connecting side instead.
  Script rst_peer;
  ScriptOp nap;
  nap.kind = ScriptOpKind::Sleep;
  nap.ticks = 3;
  rst_peer.push_back(nap);
  ScriptOp rst;
  rst.kind = ScriptOpKind::InjectRst;
  rst.port = 40000;
  rst_peer.push_back(rst);
  sim.load_script(kB, rst_peer);

  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 7777);
  REQUIRE(std::holds_alternative<ConnectFailure>(outcome));
  ConnectFailure failure = std::move(std::get<ConnectFailure>(outcome));
  CHECK(failure.error == ErrorCode::ConnectionReset);
  // Reported on the reset, well before the socket timeout.
  CHECK(sim.now() < 50);

  const Socket* socket = sim.find_socket(kA, failure.session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::Closed);
  CHECK_FALSE(socket->remote_ip.is_initialized());
  CHECK(sim.soundness_errors().empty());
}

TEST_CASE("send on a live connection writes everything") {
  Simulator sim(default_options());
  ConnectedSession session = must_connect(sim);

  const std::vector<std::uint8_t> bytes = {'h', 'e', 'l', 'l', 'o'};
  const SendOutcome sent = socket_send(session, bytes);
  CHECK(sent.error == ErrorCode::NoError);
  CHECK(sent.written == 5);

  SUBCASE("empty send is a no-op without a segment") {
    const std::size_t segments_before = [&] {
      std::size_t n = 0;
      for (const TraceRecord& r : sim.trace()) {
        if (r.kind == TraceKind::SegmentSent && r.ep == kA) ++n;
      }
      return n;
    }();
    const SendOutcome empty = socket_send(session, {});
    CHECK(empty.error == ErrorCode::NoError);
    CHECK(empty.written == 0);
    std::size_t segments_after = 0;
    for (const TraceRecord& r : sim.trace()) {
      if (r.kind == TraceKind::SegmentSent && r.ep == kA) ++segments_after;
    }
    CHECK(segments_after == segments_before);
  }
}

TEST_CASE("send after a peer reset reports ERROR_CONNECTION_RESET") {
  Simulator sim(default_options());
  sim.load_script(kB, [] {
    Script script = accepting_peer(7777);
    script.push_back(ScriptOp{ScriptOpKind::InjectRst});
    return script;
  }());
  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 7777);
  REQUIRE(std::holds_alternative<ConnectedSession>(outcome));
  ConnectedSession session = std::move(std::get<ConnectedSession>(outcome));

  // Let the injected RST land.
  ScriptOp nap;
  nap.kind = ScriptOpKind::Sleep;
  nap.ticks = 10;
  nap.sd = session.descriptor();
  (void)sim.run_op(kA, nap);

  const SendOutcome sent = socket_send(session, std::vector<std::uint8_t>{1});
  CHECK(sent.error == ErrorCode::ConnectionReset);
  const Socket* socket = sim.find_socket(kA, session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->reset_flag);
}

TEST_CASE("receive returns queued bytes, then end-of-stream after FIN") {
  Simulator sim(default_options());
  sim.load_script(kB, [] {
    Script script = accepting_peer(7777);
    ScriptOp send;
    send.kind = ScriptOpKind::Send;
    send.data = {'a', 'b', 'c'};
    script.push_back(send);
    script.push_back(ScriptOp{ScriptOpKind::Shutdown});
    return script;
  }());
  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 7777);
  REQUIRE(std::holds_alternative<ConnectedSession>(outcome));
  ConnectedSession session = std::move(std::get<ConnectedSession>(outcome));

  const ReceiveOutcome data = socket_receive(session);
  CHECK(data.error == ErrorCode::NoError);
  CHECK(data.data == std::vector<std::uint8_t>{'a', 'b', 'c'});

  // After the peer's FIN the stream signals end with empty data.
  const ReceiveOutcome eof = socket_receive(session);
  CHECK(eof.error == ErrorCode::NoError);
  CHECK(eof.data.empty());

  const Socket* socket = sim.find_socket(kA, session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::CloseWait);
}

TEST_CASE("receive with no traffic times out after the socket timeout") {
  RunOptions options = default_options();
  options.socket_timeout = 50;
  Simulator sim(options);
  ConnectedSession session = must_connect(sim);
  const VirtualTime before = sim.now();
  const ReceiveOutcome outcome = socket_receive(session);
  CHECK(outcome.error == ErrorCode::Timeout);
  CHECK(sim.now() - before >= 50);
}

TEST_CASE("shutdown against a quiet peer moves to FIN_WAIT_1") {
  Simulator sim(default_options());
  ConnectedSession session = must_connect(sim);
  const SockDescriptor sd = session.descriptor();

  ShutdownOutcome outcome = socket_shutdown(std::move(session));
  CHECK(outcome.error == ErrorCode::NoError);
  const Socket* socket = sim.find_socket(kA, sd);
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::FinWait1);
  socket_close(std::move(outcome.session));
}

TEST_CASE("shutdown after the peer closed first takes the LAST_ACK path") {
  Simulator sim(default_options());
  sim.load_script(kB, [] {
    Script script = accepting_peer(7777);
    script.push_back(ScriptOp{ScriptOpKind::Shutdown});  // peer FIN
    return script;
  }());
  ConnectOutcome outcome = socket_connect(
      must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 7777);
  REQUIRE(std::holds_alternative<ConnectedSession>(outcome));
  ConnectedSession session = std::move(std::get<ConnectedSession>(outcome));
  const SockDescriptor sd = session.descriptor();

  // Let the peer's FIN land: the connection is now CLOSE_WAIT.
  ScriptOp nap;
  nap.kind = ScriptOpKind::Sleep;
  nap.ticks = 10;
  (void)sim.run_op(kA, nap);
  REQUIRE(sim.find_socket(kA, sd)->state == TcpState::CloseWait);

  ShutdownOutcome down = socket_shutdown(std::move(session));
  CHECK(down.error == ErrorCode::NoError);
  CHECK(sim.find_socket(kA, sd)->state == TcpState::LastAck);
  CHECK(sim.violations().empty());
}

TEST_CASE("closing an unconnected session emits no segments") {
  Simulator sim(default_options());
  UnconnectedSession session = must_open(sim, kA);
  socket_close(std::move(session));
  for (const TraceRecord& r : sim.trace()) {
    CHECK(r.kind != TraceKind::SegmentSent);
  }
}

TEST_CASE("closed sessions free their slot for reuse") {
  RunOptions options = default_options();
  options.socket_capacity = 1;
  Simulator sim(options);
  socket_close(must_open(sim, kA));
  UnconnectedSession again = must_open(sim, kA);  // would fail if leaked
  socket_close(std::move(again));
}

TEST_CASE("sock_type and protocol survive both connect branches") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Simulator sim(default_options(seed));
    const bool listening = seed % 2 == 0;
    if (listening) sim.load_script(kB, accepting_peer(7777));

    ConnectOutcome outcome = socket_connect(
        must_open(sim, kA), IpAddr::parse("10.0.0.2").value(), 7777);
    const SockDescriptor sd =
        std::holds_alternative<ConnectedSession>(outcome)
            ? std::get<ConnectedSession>(outcome).descriptor()
            : std::get<ConnectFailure>(outcome).session.descriptor();
    const Socket* socket = sim.find_socket(kA, sd);
    REQUIRE(socket != nullptr);
    CHECK(socket->sock_type == SockType::Stream);
    CHECK(socket->protocol == SockProtocol::Tcp);
    CHECK(std::holds_alternative<ConnectedSession>(outcome) == listening);
    if (!listening) {
      CHECK_FALSE(socket->remote_ip.is_initialized());
    }
  }
}

TEST_CASE("accept with no peer times out back to CLOSED") {
  RunOptions options = default_options();
  options.socket_timeout = 60;
  Simulator sim(options);
  ConnectOutcome outcome = socket_listen_accept(must_open(sim, kA), 7777);
  REQUIRE(std::holds_alternative<ConnectFailure>(outcome));
  ConnectFailure failure = std::move(std::get<ConnectFailure>(outcome));
  CHECK(failure.error == ErrorCode::Timeout);
  const Socket* socket = sim.find_socket(kA, failure.session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::Closed);
}

TEST_CASE("accept meets an active opener through the full state ladder") {
  Simulator sim(default_options());
  Script opener;
  opener.push_back(ScriptOp{ScriptOpKind::Open});
  ScriptOp connect;
  connect.kind = ScriptOpKind::Connect;
  connect.ip = IpAddr::parse("10.0.0.1").value();
  connect.port = 7777;
  opener.push_back(connect);
  sim.load_script(kB, opener);

  ConnectOutcome outcome = socket_listen_accept(must_open(sim, kA), 7777);
  REQUIRE(std::holds_alternative<ConnectedSession>(outcome));
  ConnectedSession session = std::move(std::get<ConnectedSession>(outcome));

  const Socket* socket = sim.find_socket(kA, session.descriptor());
  REQUIRE(socket != nullptr);
  CHECK(socket->state == TcpState::Established);
  CHECK(socket->remote_ip == IpAddr::parse("10.0.0.2").value());

  // CLOSED -> LISTEN -> SYN_RECEIVED -> ESTABLISHED, in order.
  std::vector<std::pair<TcpState, TcpState>> changes;
  for (const TraceRecord& r : sim.trace()) {
    if (r.kind == TraceKind::StateChange && r.ep == kA && *r.from != *r.to) {
      changes.emplace_back(*r.from, *r.to);
    }
  }
  const std::vector<std::pair<TcpState, TcpState>> expected = {
      {TcpState::Closed, TcpState::Listen},
      {TcpState::Listen, TcpState::SynReceived},
      {TcpState::SynReceived, TcpState::Established},
  };
  CHECK(changes == expected);
}

TEST_CASE("no harness contract is breached by typed-API traffic") {
  Simulator sim(default_options(5));
  ConnectedSession session = must_connect(sim);
  (void)socket_send(session, std::vector<std::uint8_t>{1, 2, 3});
  ShutdownOutcome down = socket_shutdown(std::move(session));
  (void)down.error;
  socket_close(std::move(down.session));
  sim.run_to_quiescence();
  CHECK(sim.violations().empty());
  CHECK(sim.soundness_errors().empty());
}
