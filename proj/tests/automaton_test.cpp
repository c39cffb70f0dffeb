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

#include <algorithm>
#include <set>

#include "tcpconform/automaton.hpp"
#include "test_support.hpp"

using namespace tcpconform;

namespace {

// The connection diagram's edges, extracted by hand, one line per edge.
// Self-loops and the generalized reset rule are intentionally absent.
const std::vector<std::string> kDiagramEdges = {
    "CLOSED user(PASSIVE_OPEN) LISTEN",
    "CLOSED user(ACTIVE_OPEN) SYN_SENT",
    "LISTEN user(CLOSE) CLOSED",
    "LISTEN user(SEND) SYN_SENT",
    "LISTEN rcv(SYN) SYN_RECEIVED",
    "SYN_SENT user(CLOSE) CLOSED",
    "SYN_SENT rcv(SYN) SYN_RECEIVED",
    "SYN_SENT rcv(SYN+ACK) ESTABLISHED",
    "SYN_RECEIVED user(CLOSE) FIN_WAIT_1",
    "SYN_RECEIVED rcv(ACK) ESTABLISHED",
    "SYN_RECEIVED timer(SYN_RECEIVED) CLOSED",
    "ESTABLISHED user(CLOSE) FIN_WAIT_1",
    "ESTABLISHED rcv(FIN) CLOSE_WAIT",
    "FIN_WAIT_1 rcv(ACK) FIN_WAIT_2",
    "FIN_WAIT_1 rcv(FIN) CLOSING",
    "FIN_WAIT_1 rcv(FIN+ACK) TIME_WAIT",
    "FIN_WAIT_2 rcv(FIN) TIME_WAIT",
    "CLOSING rcv(ACK) TIME_WAIT",
    "CLOSE_WAIT user(CLOSE) LAST_ACK",
    "LAST_ACK rcv(ACK) CLOSED",
    "TIME_WAIT timer(2MSL) CLOSED",
};

int count_line(const std::vector<std::string>& listing,
               const std::string& line) {
  return static_cast<int>(std::count(listing.begin(), listing.end(), line));
}

}  // namespace

TEST_CASE("table matches the hand-extracted diagram edge for edge") {
  const auto listing = transition_table().canonical_listing();

  for (const std::string& edge : kDiagramEdges) {
    CAPTURE(edge);
    CHECK(count_line(listing, edge) == 1);
  }

  // 21 diagram edges + 11 self-loops + 9 reset entries.
  CHECK(kDiagramEdges.size() == 21);
  CHECK(listing.size() == 41);
}

TEST_CASE("self-loop and reset entries are exactly the declared ones") {
  int self_loops = 0;
  int resets = 0;
  for (const TransitionEntry& e : transition_table().entries()) {
    if (e.kind == TransitionEntry::Kind::Any) {
      ++self_loops;
      CHECK(e.from == e.to);
    }
    if (e.kind == TransitionEntry::Kind::Segment &&
        e.required_flags == FlagSet{TcpFlag::Rst}) {
      ++resets;
      CHECK(e.to == TcpState::Closed);
      CHECK(e.from != TcpState::Closed);
      CHECK(e.from != TcpState::Listen);
    }
  }
  CHECK(self_loops == 11);
  CHECK(resets == 9);
}

TEST_CASE("no entry reaches FIN_WAIT_1 from CLOSE_WAIT or CLOSED") {
  for (const TransitionEntry& e : transition_table().entries()) {
    if (e.to != TcpState::FinWait1) continue;
    CHECK(e.from != TcpState::CloseWait);
    CHECK(e.from != TcpState::Closed);
  }
}

TEST_CASE("is_allowed examples") {
  CHECK(is_allowed(TcpState::Listen, TcpState::SynReceived));
  CHECK_FALSE(is_allowed(TcpState::CloseWait, TcpState::FinWait1));
  CHECK(is_allowed(TcpState::Established, TcpState::Established));
}

TEST_CASE("is_allowed is reflexive and otherwise exactly edge membership") {
  for (TcpState from : kAllStates) {
    CHECK(is_allowed(from, from));
    for (TcpState to : kAllStates) {
      bool in_table = false;
      for (const TransitionEntry& e : transition_table().entries()) {
        if (e.from == from && e.to == to) in_table = true;
      }
      CAPTURE(state_name(from));
      CAPTURE(state_name(to));
      CHECK(is_allowed(from, to) == (in_table || from == to));
    }
  }
}

TEST_CASE("change_state performs allowed transitions and nothing else") {
  Socket socket = test::basic_socket(TcpState::Closed);

  SUBCASE("active open") {
    change_state(socket, TcpState::SynSent);
    CHECK(socket.state == TcpState::SynSent);
  }

  SUBCASE("disallowed transition throws and leaves the socket untouched") {
    const Socket before = socket;
    CHECK_THROWS_AS(change_state(socket, TcpState::FinWait1),
                    TransitionViolation);
    CHECK(test::sockets_equivalent(socket, before));

    try {
      change_state(socket, TcpState::FinWait1);
      FAIL("expected a violation");
    } catch (const TransitionViolation& v) {
      CHECK(v.from() == TcpState::Closed);
      CHECK(v.to() == TcpState::FinWait1);
    }
  }

  SUBCASE("self-loop succeeds without change") {
    socket.state = TcpState::TimeWait;
    const Socket before = socket;
    change_state(socket, TcpState::TimeWait);
    CHECK(test::sockets_equivalent(socket, before));
  }
}

TEST_CASE("change_state leaves every field untouched on rejection") {
  // Full-record comparison across all (from, to) pairs outside the
  // relation.
  for (TcpState from : kAllStates) {
    for (TcpState to : kAllStates) {
      if (is_allowed(from, to)) continue;
      Socket socket = test::basic_socket(from);
      socket.snd_nxt = 123;
      socket.rcv_nxt = 456;
      socket.tx_buffer = {1, 2, 3};
      const Socket before = socket;
      CHECK_THROWS_AS(change_state(socket, to), TransitionViolation);
      CHECK(test::sockets_equivalent(socket, before));
    }
  }
}

TEST_CASE("transition_table is stable and canonical") {
  const auto& first = transition_table();
  const auto& second = transition_table();
  CHECK(first == second);
  CHECK(first.canonical_listing() == second.canonical_listing());
}

TEST_CASE("table contains the recreated FIN+ACK shortcut edge") {
  const auto listing = transition_table().canonical_listing();
  CHECK(count_line(listing, "FIN_WAIT_1 rcv(FIN+ACK) TIME_WAIT") == 1);
  CHECK(count_line(listing, "SYN_SENT rcv(SYN+ACK) ESTABLISHED") == 1);
}

TEST_CASE("canonical listing is sorted") {
  const auto listing = transition_table().canonical_listing();
  CHECK(std::is_sorted(listing.begin(), listing.end()));
}

TEST_CASE("segment entries match on flag subsets, most specific first") {
  const Trigger syn_ack = SegmentArrival{FlagSet{TcpFlag::Syn, TcpFlag::Ack}};
  const auto matches = transition_table().matching(TcpState::SynSent, syn_ack);

  REQUIRE(!matches.empty());
  // SYN+ACK entry wins over the plain SYN entry and the self-loop.
  CHECK(matches.front().to == TcpState::Established);

  std::set<TcpState> targets;
  for (const auto& m : matches) targets.insert(m.to);
  CHECK(targets ==
        std::set<TcpState>{TcpState::Established, TcpState::SynReceived,
                           TcpState::SynSent});
}

TEST_CASE("timer triggers match only their own kind") {
  const Trigger expiry = TimerExpiry{TimerKind::TimeWaitTimeout};
  const auto matches = transition_table().matching(TcpState::TimeWait, expiry);
  REQUIRE(!matches.empty());
  CHECK(matches.front().to == TcpState::Closed);

  const auto wrong =
      transition_table().matching(TcpState::SynReceived,
                                  Trigger{TimerExpiry{TimerKind::TimeWaitTimeout}});
  for (const auto& m : wrong) CHECK(m.kind == TransitionEntry::Kind::Any);
}
