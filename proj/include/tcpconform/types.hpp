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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tcpconform {

// The eleven states a TCP connection can exhibit over its lifetime.
//
//   LISTEN        waiting for a connection request from any remote TCP
//   SYN_SENT      waiting for a matching request after sending one
//   SYN_RECEIVED  waiting for a confirming acknowledgement after having
//                 both received and sent a connection request
//   ESTABLISHED   open connection, the normal data-transfer state
//   FIN_WAIT_1    waiting for a termination request from the remote TCP,
//                 or an acknowledgement of the one already sent
//   FIN_WAIT_2    waiting for a termination request from the remote TCP
//   CLOSE_WAIT    waiting for a termination request from the local user
//   CLOSING       waiting for a termination-request acknowledgement
//   LAST_ACK      waiting for the acknowledgement of our own FIN
//   TIME_WAIT     waiting out 2*MSL before releasing the connection
//   CLOSED        no connection state at all
enum class TcpState : std::uint8_t {
  Closed = 0,
  Listen,
  SynSent,
  SynReceived,
  Established,
  FinWait1,
  FinWait2,
  CloseWait,
  Closing,
  LastAck,
  TimeWait,
};

inline constexpr std::size_t kStateCount = 11;

inline constexpr std::array<TcpState, kStateCount> kAllStates = {
    TcpState::Closed,      TcpState::Listen,   TcpState::SynSent,
    TcpState::SynReceived, TcpState::Established,
    TcpState::FinWait1,    TcpState::FinWait2, TcpState::CloseWait,
    TcpState::Closing,     TcpState::LastAck,  TcpState::TimeWait,
};

std::string_view state_name(TcpState state);
std::optional<TcpState> state_from_name(std::string_view name);

// True when the raw value is one of the eleven enumerators. Sockets can
// in principle carry a corrupted state value; dispatch treats those as a
// recovery case rather than undefined behaviour.
constexpr bool is_valid_state(TcpState state) {
  return static_cast<std::uint8_t>(state) < kStateCount;
}

// Header control bits, low to high: FIN, SYN, RST, PSH, ACK. The encoded
// value of any flag combination therefore never exceeds 31.
enum class TcpFlag : std::uint8_t {
  Fin = 1 << 0,
  Syn = 1 << 1,
  Rst = 1 << 2,
  Psh = 1 << 3,
  Ack = 1 << 4,
};

// A set of header flags. Encodes to [0, 31].
class FlagSet {
 public:
  static constexpr std::uint8_t kMaxEncoded = 31;

  constexpr FlagSet() = default;
  constexpr explicit FlagSet(std::uint8_t encoded)
      : bits_(encoded & kMaxEncoded) {}
  constexpr FlagSet(std::initializer_list<TcpFlag> flags) {
    for (TcpFlag f : flags) bits_ |= static_cast<std::uint8_t>(f);
  }

  constexpr std::uint8_t encoded() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }

  constexpr bool has(TcpFlag f) const {
    return (bits_ & static_cast<std::uint8_t>(f)) != 0;
  }
  // True when every flag of `required` is present here.
  constexpr bool contains_all(FlagSet required) const {
    return (bits_ & required.bits_) == required.bits_;
  }
  constexpr int count() const {
    int n = 0;
    for (std::uint8_t b = bits_; b != 0; b &= static_cast<std::uint8_t>(b - 1))
      ++n;
    return n;
  }

  constexpr FlagSet with(TcpFlag f) const {
    return FlagSet(static_cast<std::uint8_t>(
        bits_ | static_cast<std::uint8_t>(f)));
  }

  friend constexpr bool operator==(FlagSet a, FlagSet b) = default;

 private:
  std::uint8_t bits_ = 0;
};

// Renders e.g. {SYN, ACK} as "SYN+ACK" (bit order), empty set as "none".
std::string flags_name(FlagSet flags);
std::optional<FlagSet> flags_from_name(std::string_view name);

}  // namespace tcpconform
