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
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcpconform/types.hpp"

namespace tcpconform {

// Virtual time. The simulator never sleeps on the wall clock; a tick is
// the abstract millisecond all timeouts are expressed in.
using VirtualTime = std::uint64_t;
using Duration = std::uint64_t;

using Port = std::uint16_t;
using SeqNum = std::uint32_t;
using SockDescriptor = std::uint32_t;

// Simulated IPv4 address. Value 0 means "not initialized".
class IpAddr {
 public:
  constexpr IpAddr() = default;
  constexpr explicit IpAddr(std::uint32_t v4) : v4_(v4) {}

  constexpr bool is_initialized() const { return v4_ != 0; }
  constexpr std::uint32_t value() const { return v4_; }

  std::string to_string() const;
  static std::optional<IpAddr> parse(std::string_view dotted);

  friend constexpr bool operator==(IpAddr, IpAddr) = default;

 private:
  std::uint32_t v4_ = 0;
};

enum class SockType : std::uint8_t { Stream, Dgram };
enum class SockProtocol : std::uint8_t { Tcp, Udp };

// Abstract TCP segment. Only the header fields the connection automaton
// cares about are modeled; checksum is carried but never verified.
// `payload` holds the actual bytes when data rides along and is kept the
// same size as `length` by the builders.
struct Segment {
  Port src_port = 0;
  Port dest_port = 0;
  SeqNum seq_num = 0;
  SeqNum ack_num = 0;
  FlagSet flags;
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::uint32_t length = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Segment&, const Segment&) = default;
};

Segment make_segment(Port src, Port dest, SeqNum seq, SeqNum ack, FlagSet flags,
                     std::vector<std::uint8_t> payload = {});

// Socket events raised by update_events and consumed by event waits.
enum class SocketEvent : std::uint8_t {
  Connected = 1 << 0,
  Closed = 1 << 1,
  TxReady = 1 << 2,
  TxDone = 1 << 3,
  RxReady = 1 << 4,
  LinkReset = 1 << 5,
};

class EventMask {
 public:
  constexpr EventMask() = default;
  constexpr explicit EventMask(std::uint8_t encoded) : bits_(encoded) {}
  constexpr EventMask(std::initializer_list<SocketEvent> events) {
    for (SocketEvent e : events) bits_ |= static_cast<std::uint8_t>(e);
  }

  constexpr std::uint8_t encoded() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool has(SocketEvent e) const {
    return (bits_ & static_cast<std::uint8_t>(e)) != 0;
  }
  constexpr bool intersects(EventMask other) const {
    return (bits_ & other.bits_) != 0;
  }
  constexpr EventMask operator|(EventMask other) const {
    return EventMask(static_cast<std::uint8_t>(bits_ | other.bits_));
  }
  constexpr EventMask operator&(EventMask other) const {
    return EventMask(static_cast<std::uint8_t>(bits_ & other.bits_));
  }

  friend constexpr bool operator==(EventMask, EventMask) = default;

 private:
  std::uint8_t bits_ = 0;
};

std::string event_mask_name(EventMask mask);

// Connection endpoint record: the single shared resource of the
// three-task model. One activity at a time may mutate it; the harness
// enforces that with the guard_owner token below.
struct Socket {
  SockDescriptor descriptor = 0;
  SockType sock_type = SockType::Stream;
  SockProtocol protocol = SockProtocol::Tcp;
  IpAddr local_ip;    // unset until bound
  Port local_port = 0;
  IpAddr remote_ip;   // unset until a successful connect or accepted open
  Port remote_port = 0;
  Duration timeout = 100;
  TcpState state = TcpState::Closed;
  bool reset_flag = false;  // a RST was processed since the last open
  SeqNum snd_nxt = 0;
  SeqNum rcv_nxt = 0;
  EventMask event_flags;
  std::deque<std::uint8_t> tx_buffer;
  std::deque<std::uint8_t> rx_buffer;

  // -- engine bookkeeping, outside the model projection --
  bool fin_received = false;
  // Responses queued by segment handlers; drained by the harness. The
  // handlers never perform I/O themselves.
  std::deque<Segment> out_queue;
  // Newest unacknowledged control segment (SYN/FIN), for the
  // retransmission timer.
  std::optional<Segment> unacked_control;
  int control_retransmits = 0;

  // Invoked on every successful guarded state change (from, to).
  std::function<void(TcpState, TcpState)> on_transition;

  // Activity token of the current guard holder, 0 when free.
  std::uint32_t guard_owner = 0;
};

// Projection of a socket used to detect illegitimate handler side
// effects: two sockets are model-equal iff all projected fields are.
struct SocketModel {
  SockType sock_type = SockType::Stream;
  SockProtocol protocol = SockProtocol::Tcp;
  IpAddr local_ip;
  Port local_port = 0;
  IpAddr remote_ip;
  Port remote_port = 0;
  TcpState state = TcpState::Closed;
  bool reset_flag = false;
  SeqNum snd_nxt = 0;
  SeqNum rcv_nxt = 0;

  friend bool operator==(const SocketModel&, const SocketModel&) = default;
};

SocketModel to_model(const Socket& socket);
std::string model_to_string(const SocketModel& model);

}  // namespace tcpconform
