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

#include <map>
#include <random>

#include "tcpconform/segment_engine.hpp"
#include "test_support.hpp"

using namespace tcpconform;

namespace {

Segment to_socket(const Socket& socket, FlagSet flags, std::int32_t seq_off = 0,
                  std::int32_t ack_off = 0,
                  std::vector<std::uint8_t> payload = {}) {
  return make_segment(socket.remote_port, socket.local_port,
                      socket.rcv_nxt + seq_off, socket.snd_nxt + ack_off, flags,
                      std::move(payload));
}

// Closure sets worked out by hand from the diagram (segment edges plus
// the reset rule), frozen here.
const std::map<TcpState, StateSet> kExpectedClosures = {
    {TcpState::Closed, {TcpState::Closed}},
    {TcpState::Listen,
     {TcpState::Listen, TcpState::SynReceived, TcpState::Established,
      TcpState::CloseWait, TcpState::Closed}},
    {TcpState::SynSent,
     {TcpState::SynSent, TcpState::SynReceived, TcpState::Established,
      TcpState::CloseWait, TcpState::Closed}},
    {TcpState::SynReceived,
     {TcpState::SynReceived, TcpState::Established, TcpState::CloseWait,
      TcpState::Closed}},
    {TcpState::Established,
     {TcpState::Established, TcpState::CloseWait, TcpState::Closed}},
    {TcpState::FinWait1,
     {TcpState::FinWait1, TcpState::FinWait2, TcpState::Closing,
      TcpState::TimeWait, TcpState::Closed}},
    {TcpState::FinWait2,
     {TcpState::FinWait2, TcpState::TimeWait, TcpState::Closed}},
    {TcpState::CloseWait, {TcpState::CloseWait, TcpState::Closed}},
    {TcpState::Closing,
     {TcpState::Closing, TcpState::TimeWait, TcpState::Closed}},
    {TcpState::LastAck, {TcpState::LastAck, TcpState::Closed}},
    {TcpState::TimeWait, {TcpState::TimeWait, TcpState::Closed}},
};

}  // namespace

TEST_CASE("one-segment successors equal the table's per-state edges") {
  for (TcpState s : kAllStates) {
    CAPTURE(state_name(s));
    CHECK(segment_successors(s) == test::bfs_closure_oracle(s, 1));
  }
}

TEST_CASE("reachable_states equals the BFS oracle and the frozen sets") {
  for (TcpState s : kAllStates) {
    CAPTURE(state_name(s));
    const StateSet engine = reachable_states(s);
    CHECK(engine == test::bfs_closure_oracle(s, 3));
    CHECK(engine == kExpectedClosures.at(s));
    CHECK(engine.contains(s));
  }
}

TEST_CASE("depth 3 is a fixpoint of the closure") {
  for (TcpState s : kAllStates) {
    CAPTURE(state_name(s));
    CHECK(reachable_states_depth(s, 3) == reachable_states_depth(s, 4));
  }
}

TEST_CASE("SYN_SENT closure grows at depths 1..3 and stalls at 4") {
  const TcpState s = TcpState::SynSent;
  CHECK(reachable_states_depth(s, 0).size() == 1);
  CHECK(reachable_states_depth(s, 1).size() == 4);
  CHECK(reachable_states_depth(s, 2).size() == 5);
  CHECK(reachable_states_depth(s, 3).size() == 5);
  // The depth-2 set already holds CLOSE_WAIT; what depth 3 certifies is
  // the fixpoint, which depth 4 then re-confirms.
  CHECK(reachable_states_depth(s, 3) == reachable_states_depth(s, 4));
}

TEST_CASE("CLOSE_WAIT handler: RST closes, nothing else moves the model") {
  SUBCASE("RST tears the connection down") {
    Socket socket = test::basic_socket(TcpState::CloseWait);
    const SocketModel before = to_model(socket);
    handle_in_state(socket, to_socket(socket, {TcpFlag::Rst}));
    CHECK(socket.state == TcpState::Closed);
    CHECK(socket.reset_flag);
    // Only state and the reset flag may differ.
    SocketModel expected = before;
    expected.state = TcpState::Closed;
    expected.reset_flag = true;
    CHECK(to_model(socket) == expected);
  }

  SUBCASE("a plain ACK leaves the model untouched") {
    Socket socket = test::basic_socket(TcpState::CloseWait);
    const SocketModel before = to_model(socket);
    handle_in_state(socket, to_socket(socket, {TcpFlag::Ack}));
    CHECK(socket.state == TcpState::CloseWait);
    CHECK(to_model(socket) == before);
  }
}

TEST_CASE("LISTEN answers SYN with SYN+ACK and moves to SYN_RECEIVED") {
  Socket socket = test::basic_socket(TcpState::Listen);
  socket.remote_port = 0;
  Segment syn = make_segment(4242, socket.local_port, 700, 0, {TcpFlag::Syn});
  handle_in_state(socket, syn);

  CHECK(socket.state == TcpState::SynReceived);
  CHECK(socket.rcv_nxt == 701);
  CHECK(socket.remote_port == 4242);
  REQUIRE(socket.out_queue.size() == 1);
  CHECK(socket.out_queue.front().flags == FlagSet{TcpFlag::Syn, TcpFlag::Ack});
  CHECK(socket.out_queue.front().ack_num == 701);
}

TEST_CASE("an unrecognized state value recovers to CLOSED") {
  Socket socket = test::basic_socket(TcpState::Established);
  socket.state = static_cast<TcpState>(99);
  handle_in_state(socket, to_socket(socket, {TcpFlag::Ack}));
  CHECK(socket.state == TcpState::Closed);
  CHECK(socket.out_queue.empty());
}

TEST_CASE("process_one_segment ignores segments for other ports") {
  Socket socket = test::basic_socket(TcpState::Established);
  const Socket before = socket;
  Segment stray = to_socket(socket, {TcpFlag::Fin});
  stray.dest_port = socket.local_port + 1;
  process_one_segment(socket, stray);
  CHECK(test::sockets_equivalent(socket, before));
}

TEST_CASE("in-order FIN on an open connection yields CLOSE_WAIT plus ACK") {
  Socket socket = test::basic_socket(TcpState::Established);
  process_one_segment(socket, to_socket(socket, {TcpFlag::Fin}));
  CHECK(socket.state == TcpState::CloseWait);
  CHECK(socket.fin_received);
  REQUIRE(socket.out_queue.size() == 1);
  CHECK(socket.out_queue.front().flags == FlagSet{TcpFlag::Ack});
  CHECK(update_events(socket).has(SocketEvent::RxReady));
}

TEST_CASE("SYN+ACK acknowledging our SYN completes the connect") {
  Socket socket = test::basic_socket(TcpState::SynSent);
  process_one_segment(socket,
                      to_socket(socket, {TcpFlag::Syn, TcpFlag::Ack}));
  CHECK(socket.state == TcpState::Established);
  CHECK(socket.event_flags.has(SocketEvent::Connected));
  REQUIRE(socket.out_queue.size() == 1);
  CHECK(socket.out_queue.front().flags == FlagSet{TcpFlag::Ack});
}

TEST_CASE("stale SYN+ACK does not complete the connect") {
  Socket socket = test::basic_socket(TcpState::SynSent);
  process_one_segment(
      socket, to_socket(socket, {TcpFlag::Syn, TcpFlag::Ack}, 0, /*ack_off=*/-1));
  CHECK(socket.state == TcpState::SynSent);
}

TEST_CASE("out-of-order segment is answered with a re-ACK") {
  Socket socket = test::basic_socket(TcpState::Established);
  const SocketModel before = to_model(socket);
  process_one_segment(socket, to_socket(socket, {TcpFlag::Ack}, /*seq_off=*/1));
  CHECK(to_model(socket) == before);
  REQUIRE(socket.out_queue.size() == 1);
  CHECK(socket.out_queue.front().flags == FlagSet{TcpFlag::Ack});
  CHECK(socket.out_queue.front().ack_num == socket.rcv_nxt);
}

TEST_CASE("data is delivered in order and acknowledged") {
  Socket socket = test::basic_socket(TcpState::Established);
  const SeqNum rcv_before = socket.rcv_nxt;
  process_one_segment(
      socket, to_socket(socket, {TcpFlag::Psh, TcpFlag::Ack}, 0, 0,
                        {'a', 'b', 'c'}));
  CHECK(socket.state == TcpState::Established);
  CHECK(socket.rcv_nxt == rcv_before + 3);
  CHECK(socket.rx_buffer == std::deque<std::uint8_t>{'a', 'b', 'c'});
  CHECK(update_events(socket).has(SocketEvent::RxReady));
}

TEST_CASE("update_events mapping") {
  SUBCASE("established with empty tx") {
    Socket socket = test::basic_socket(TcpState::Established);
    const EventMask mask = update_events(socket);
    CHECK(mask.has(SocketEvent::Connected));
    CHECK(mask.has(SocketEvent::TxDone));
    CHECK_FALSE(mask.has(SocketEvent::Closed));
  }

  SUBCASE("closed after reset") {
    Socket socket = test::basic_socket(TcpState::Closed);
    socket.reset_flag = true;
    const EventMask mask = update_events(socket);
    CHECK(mask.has(SocketEvent::Closed));
    CHECK(mask.has(SocketEvent::LinkReset));
  }

  SUBCASE("no CONNECTED while the handshake is in flight") {
    Socket socket = test::basic_socket(TcpState::SynSent);
    CHECK_FALSE(update_events(socket).has(SocketEvent::Connected));
    CHECK_FALSE(update_events(socket).has(SocketEvent::TxDone));
  }

  SUBCASE("pending tx masks TX_DONE") {
    Socket socket = test::basic_socket(TcpState::Established);
    socket.tx_buffer.push_back(1);
    CHECK_FALSE(update_events(socket).has(SocketEvent::TxDone));
  }
}

TEST_CASE("update_events is a pure function of the socket") {
  std::mt19937 rng(7);
  for (int i = 0; i < 200; ++i) {
    Socket socket = test::basic_socket(
        kAllStates[rng() % kAllStates.size()]);
    socket.reset_flag = (rng() % 2) == 0;
    socket.fin_received = (rng() % 2) == 0;
    if (rng() % 2) socket.tx_buffer.push_back(1);
    if (rng() % 2) socket.rx_buffer.push_back(1);
    const Socket copy = socket;
    CHECK(update_events(socket) == update_events(copy));
    CHECK(test::sockets_equivalent(socket, copy));
  }
}

TEST_CASE("wait_for_events_states follows the level-by-level closure") {
  using S = TcpState;

  SUBCASE("TX_DONE from ESTABLISHED spans the close-wait and reset paths") {
    const StateSet result =
        wait_for_events_states(S::Established, {SocketEvent::TxDone});
    CHECK(result == StateSet{S::Established, S::CloseWait, S::Closed});
  }

  SUBCASE("CONNECTED from ESTABLISHED is satisfied on entry") {
    CHECK(wait_for_events_states(S::Established, {SocketEvent::Connected}) ==
          StateSet{S::Established});
  }

  SUBCASE("TX_DONE from LISTEN, hand-executed") {
    CHECK(wait_for_events_states(S::Listen, {SocketEvent::TxDone}) ==
          StateSet{S::Listen, S::SynReceived, S::Established, S::Closed});
  }

  SUBCASE("CONNECTED from SYN_SENT") {
    CHECK(wait_for_events_states(S::SynSent, {SocketEvent::Connected}) ==
          StateSet{S::SynSent, S::SynReceived, S::Established, S::Closed});
  }

  SUBCASE("unreachable event yields the empty set") {
    CHECK(wait_for_events_states(S::Closed, {SocketEvent::Connected}) ==
          StateSet{});
  }
}

TEST_CASE("seeded defects actually produce nonconforming behavior") {
  SUBCASE("CLOSE_WAIT defect faults in change_state") {
    Socket socket = test::basic_socket(TcpState::CloseWait);
    CHECK_THROWS_AS(
        handle_in_state(socket, to_socket(socket, {TcpFlag::Fin}),
                        EngineDefect::CloseWaitFinToFinWait1),
        TransitionViolation);
  }

  SUBCASE("ESTABLISHED defect slips through the guard") {
    // FIN_WAIT_1 is reachable from ESTABLISHED via a user Close, so the
    // pairwise guard cannot catch this one; the sweep has to.
    Socket socket = test::basic_socket(TcpState::Established);
    handle_in_state(socket, to_socket(socket, {TcpFlag::Fin}),
                    EngineDefect::EstablishedFinToFinWait1);
    CHECK(socket.state == TcpState::FinWait1);
  }
}
