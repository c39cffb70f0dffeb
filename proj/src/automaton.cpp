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

#include "tcpconform/automaton.hpp"

#include <algorithm>
#include <tuple>

namespace tcpconform {

namespace {

TransitionEntry user_edge(TcpState from, UserCallKind kind, TcpState to) {
  TransitionEntry e;
  e.from = from;
  e.kind = TransitionEntry::Kind::User;
  e.user_kind = kind;
  e.to = to;
  return e;
}

TransitionEntry segment_edge(TcpState from, FlagSet required, TcpState to) {
  TransitionEntry e;
  e.from = from;
  e.kind = TransitionEntry::Kind::Segment;
  e.required_flags = required;
  e.to = to;
  return e;
}

TransitionEntry timer_edge(TcpState from, TimerKind kind, TcpState to) {
  TransitionEntry e;
  e.from = from;
  e.kind = TransitionEntry::Kind::Timer;
  e.timer_kind = kind;
  e.to = to;
  return e;
}

TransitionEntry self_loop(TcpState state) {
  TransitionEntry e;
  e.from = state;
  e.kind = TransitionEntry::Kind::Any;
  e.to = state;
  return e;
}

std::string_view user_kind_name(UserCallKind kind) {
  switch (kind) {
    case UserCallKind::PassiveOpen: return "PASSIVE_OPEN";
    case UserCallKind::ActiveOpen: return "ACTIVE_OPEN";
    case UserCallKind::Close: return "CLOSE";
    case UserCallKind::Send: return "SEND";
  }
  return "?";
}

std::string_view timer_kind_name(TimerKind kind) {
  switch (kind) {
    case TimerKind::SynReceivedTimeout: return "SYN_RECEIVED";
    case TimerKind::TimeWaitTimeout: return "2MSL";
  }
  return "?";
}

}  // namespace

bool TransitionEntry::matches(const Trigger& trigger) const {
  switch (kind) {
    case Kind::Any:
      return true;
    case Kind::User: {
      const auto* call = std::get_if<UserCall>(&trigger);
      return call != nullptr && call->kind == user_kind;
    }
    case Kind::Segment: {
      const auto* arrival = std::get_if<SegmentArrival>(&trigger);
      return arrival != nullptr &&
             arrival->flags.contains_all(required_flags);
    }
    case Kind::Timer: {
      const auto* expiry = std::get_if<TimerExpiry>(&trigger);
      return expiry != nullptr && expiry->kind == timer_kind;
    }
  }
  return false;
}

std::string TransitionEntry::trigger_name() const {
  switch (kind) {
    case Kind::Any:
      return "*";
    case Kind::User:
      return "user(" + std::string(user_kind_name(user_kind)) + ")";
    case Kind::Segment:
      return "rcv(" + flags_name(required_flags) + ")";
    case Kind::Timer:
      return "timer(" + std::string(timer_kind_name(timer_kind)) + ")";
  }
  return "?";
}

TransitionTable TransitionTable::canonical() {
  using S = TcpState;
  using U = UserCallKind;
  const FlagSet syn{TcpFlag::Syn};
  const FlagSet ack{TcpFlag::Ack};
  const FlagSet fin{TcpFlag::Fin};
  const FlagSet syn_ack{TcpFlag::Syn, TcpFlag::Ack};
  const FlagSet fin_ack{TcpFlag::Fin, TcpFlag::Ack};
  const FlagSet rst{TcpFlag::Rst};

  TransitionTable table;
  auto& e = table.entries_;

  // User-action edges.
  e.push_back(user_edge(S::Closed, U::PassiveOpen, S::Listen));
  e.push_back(user_edge(S::Closed, U::ActiveOpen, S::SynSent));
  e.push_back(user_edge(S::Listen, U::Close, S::Closed));
  e.push_back(user_edge(S::Listen, U::Send, S::SynSent));
  e.push_back(user_edge(S::SynSent, U::Close, S::Closed));
  e.push_back(user_edge(S::SynReceived, U::Close, S::FinWait1));
  e.push_back(user_edge(S::Established, U::Close, S::FinWait1));
  e.push_back(user_edge(S::CloseWait, U::Close, S::LastAck));

  // Segment-arrival edges. The FIN_WAIT_1 -> TIME_WAIT entry covers the
  // case where ACK and FIN are received in the same segment.
  e.push_back(segment_edge(S::Listen, syn, S::SynReceived));
  e.push_back(segment_edge(S::SynSent, syn, S::SynReceived));
  e.push_back(segment_edge(S::SynSent, syn_ack, S::Established));
  e.push_back(segment_edge(S::SynReceived, ack, S::Established));
  e.push_back(segment_edge(S::Established, fin, S::CloseWait));
  e.push_back(segment_edge(S::FinWait1, ack, S::FinWait2));
  e.push_back(segment_edge(S::FinWait1, fin, S::Closing));
  e.push_back(segment_edge(S::FinWait1, fin_ack, S::TimeWait));
  e.push_back(segment_edge(S::FinWait2, fin, S::TimeWait));
  e.push_back(segment_edge(S::Closing, ack, S::TimeWait));
  e.push_back(segment_edge(S::LastAck, ack, S::Closed));

  // Timer edges.
  e.push_back(timer_edge(S::SynReceived, TimerKind::SynReceivedTimeout,
                         S::Closed));
  e.push_back(timer_edge(S::TimeWait, TimerKind::TimeWaitTimeout, S::Closed));

  // Handlers may leave the state untouched from anywhere.
  for (TcpState s : kAllStates) e.push_back(self_loop(s));

  // A RST tears the connection down from every state except CLOSED and
  // LISTEN.
  for (TcpState s : kAllStates) {
    if (s == S::Closed || s == S::Listen) continue;
    e.push_back(segment_edge(s, rst, S::Closed));
  }

  for (const TransitionEntry& entry : e) {
    table.allowed_[index(entry.from)][index(entry.to)] = true;
  }
  return table;
}

std::vector<TransitionEntry> TransitionTable::matching(
    TcpState from, const Trigger& trigger) const {
  std::vector<TransitionEntry> out;
  for (const TransitionEntry& entry : entries_) {
    if (entry.from == from && entry.matches(trigger)) out.push_back(entry);
  }
  // Most specific first: a SYN+ACK entry beats a SYN entry, and any
  // concrete entry beats the self-loop.
  std::stable_sort(out.begin(), out.end(),
                   [](const TransitionEntry& a, const TransitionEntry& b) {
                     auto specificity = [](const TransitionEntry& entry) {
                       if (entry.kind == TransitionEntry::Kind::Any) return -1;
                       if (entry.kind == TransitionEntry::Kind::Segment)
                         return entry.required_flags.count();
                       return 1;
                     };
                     return specificity(a) > specificity(b);
                   });
  return out;
}

std::vector<std::string> TransitionTable::canonical_listing() const {
  std::vector<std::tuple<std::string, std::string, std::string>> rows;
  rows.reserve(entries_.size());
  for (const TransitionEntry& entry : entries_) {
    rows.emplace_back(std::string(state_name(entry.from)),
                      entry.trigger_name(),
                      std::string(state_name(entry.to)));
  }
  std::sort(rows.begin(), rows.end());
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (const auto& [from, trigger, to] : rows) {
    lines.push_back(from + " " + trigger + " " + to);
  }
  return lines;
}

const TransitionTable& transition_table() {
  static const TransitionTable table = TransitionTable::canonical();
  return table;
}

bool is_allowed(TcpState from, TcpState to) {
  if (from == to) return true;
  if (!is_valid_state(from) || !is_valid_state(to)) return false;
  return transition_table().contains(from, to);
}

TransitionViolation::TransitionViolation(TcpState from, TcpState to)
    : std::logic_error("transition violation: " +
                       std::string(state_name(from)) + " -> " +
                       std::string(state_name(to))),
      from_(from),
      to_(to) {}

void change_state(Socket& socket, TcpState new_state) {
  const TcpState old_state = socket.state;
  if (!is_allowed(old_state, new_state)) {
    throw TransitionViolation(old_state, new_state);
  }
  socket.state = new_state;
  if (socket.on_transition) socket.on_transition(old_state, new_state);
}

}  // namespace tcpconform
