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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tcpconform/socket.hpp"
#include "tcpconform/types.hpp"

namespace tcpconform {

// What caused a transition: an explicit user action, the arrival of a
// segment with a particular flag combination, or a timeout.
enum class UserCallKind : std::uint8_t { PassiveOpen, ActiveOpen, Close, Send };
enum class TimerKind : std::uint8_t { SynReceivedTimeout, TimeWaitTimeout };

struct UserCall {
  UserCallKind kind;
  friend constexpr bool operator==(UserCall, UserCall) = default;
};
struct SegmentArrival {
  FlagSet flags;
  friend constexpr bool operator==(SegmentArrival, SegmentArrival) = default;
};
struct TimerExpiry {
  TimerKind kind;
  friend constexpr bool operator==(TimerExpiry, TimerExpiry) = default;
};

using Trigger = std::variant<UserCall, SegmentArrival, TimerExpiry>;

// One row of the allowed-transition relation. Segment entries match on
// flag subsets: an arriving segment matches when every required flag is
// present. Self-loop entries match any trigger.
struct TransitionEntry {
  enum class Kind : std::uint8_t { User, Segment, Timer, Any };

  TcpState from;
  Kind kind;
  UserCallKind user_kind = UserCallKind::Close;       // valid when kind==User
  FlagSet required_flags;                             // valid when kind==Segment
  TimerKind timer_kind = TimerKind::TimeWaitTimeout;  // valid when kind==Timer
  TcpState to;

  bool matches(const Trigger& trigger) const;
  std::string trigger_name() const;

  friend bool operator==(const TransitionEntry&,
                         const TransitionEntry&) = default;
};

// The machine-readable form of the connection automaton: every edge of
// the state diagram, one self-loop per state (handlers frequently leave
// the state unchanged), and a reset entry (s, rcv RST, CLOSED) for every
// state other than CLOSED and LISTEN. The diagram itself omits
// error-conditions; the reset entries carry the RST rule. A listening
// socket discards RSTs, so LISTEN deliberately has no reset entry.
class TransitionTable {
 public:
  static TransitionTable canonical();

  const std::vector<TransitionEntry>& entries() const { return entries_; }

  bool contains(TcpState from, TcpState to) const {
    return allowed_[index(from)][index(to)];
  }

  // Entries out of `from` matching `trigger`, most specific first
  // (a SYN+ACK edge is preferred over a SYN edge).
  std::vector<TransitionEntry> matching(TcpState from,
                                        const Trigger& trigger) const;

  // One "FROM TRIGGER TO" line per entry, states upper-snake-case,
  // sorted lexicographically by (from, trigger, to).
  std::vector<std::string> canonical_listing() const;

  friend bool operator==(const TransitionTable&,
                         const TransitionTable&) = default;

 private:
  static std::size_t index(TcpState s) {
    return static_cast<std::size_t>(s);
  }

  std::vector<TransitionEntry> entries_;
  bool allowed_[kStateCount][kStateCount] = {};
};

// The immutable canonical table. Repeated calls return the same value.
const TransitionTable& transition_table();

// True iff some table entry maps from -> to under any trigger class, or
// from = to. Total; invalid state values are never allowed anywhere but
// onto themselves.
bool is_allowed(TcpState from, TcpState to);

// Raised when a caller asks for a transition outside the automaton. This
// signals a conformance bug in the caller, not a recoverable condition.
class TransitionViolation : public std::logic_error {
 public:
  TransitionViolation(TcpState from, TcpState to);

  TcpState from() const { return from_; }
  TcpState to() const { return to_; }

 private:
  TcpState from_;
  TcpState to_;
};

// The guarded state change: every state transition anywhere in the
// library goes through here. On success the socket's state is updated
// (and its transition hook fired); nothing else is touched. On a
// disallowed transition the socket is left unchanged and a
// TransitionViolation carrying (from, to) is thrown.
void change_state(Socket& socket, TcpState new_state);

}  // namespace tcpconform
