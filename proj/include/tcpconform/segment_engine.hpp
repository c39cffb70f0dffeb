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
#include <string>
#include <vector>

#include "tcpconform/automaton.hpp"
#include "tcpconform/socket.hpp"
#include "tcpconform/types.hpp"

namespace tcpconform {

// Subset of the eleven connection states.
class StateSet {
 public:
  constexpr StateSet() = default;
  constexpr StateSet(std::initializer_list<TcpState> states) {
    for (TcpState s : states) insert(s);
  }

  constexpr void insert(TcpState s) {
    bits_ |= static_cast<std::uint16_t>(1u << static_cast<unsigned>(s));
  }
  constexpr bool contains(TcpState s) const {
    return (bits_ & (1u << static_cast<unsigned>(s))) != 0;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const {
    std::size_t n = 0;
    for (std::uint16_t b = bits_; b != 0; b &= static_cast<std::uint16_t>(b - 1))
      ++n;
    return n;
  }
  constexpr bool is_subset_of(StateSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  constexpr StateSet& operator|=(StateSet other) {
    bits_ |= other.bits_;
    return *this;
  }
  constexpr StateSet operator|(StateSet other) const {
    StateSet out = *this;
    out |= other;
    return out;
  }

  std::vector<TcpState> to_vector() const;
  std::string to_string() const;

  friend constexpr bool operator==(StateSet, StateSet) = default;

 private:
  std::uint16_t bits_ = 0;
};

// Seedable handler defects, used by the conformance checker to verify
// that its sweeps actually catch broken handlers. None in normal use.
enum class EngineDefect : std::uint8_t {
  None = 0,
  // CLOSE_WAIT handler jumps to FIN_WAIT_1 whenever FIN is present.
  CloseWaitFinToFinWait1,
  // ESTABLISHED handler closes the wrong way on FIN: FIN_WAIT_1 instead
  // of CLOSE_WAIT. The transition is automaton-legal (a user Close edge
  // exists) so only the per-state sweep can notice.
  EstablishedFinToFinWait1,
  // FIN_WAIT_2 handler skips TIME_WAIT and goes straight to CLOSED
  // without marking a reset.
  FinWait2FinToClosed,
};

// Per-state processing of one arriving segment: the dispatcher picks the
// handler matching socket.state, and the handler performs any state
// change through change_state, so a nonconforming handler faults loudly.
// Responses (ACK, SYN+ACK, ...) are queued on socket.out_queue; handlers
// never perform I/O. A socket carrying an unrecognized state value is
// put back into CLOSED and the segment is silently discarded.
void handle_in_state(Socket& socket, const Segment& segment,
                     EngineDefect defect = EngineDefect::None);

// The one-segment relation: delivers a segment to the socket if the
// destination port matches (otherwise the socket is left untouched) and
// recomputes the socket's event flags afterwards.
void process_one_segment(Socket& socket, const Segment& segment,
                         EngineDefect defect = EngineDefect::None);

// Pure event mapping:
//   CONNECTED   state is ESTABLISHED or CLOSE_WAIT
//   CLOSED      state is CLOSED
//   TX_READY    the connection accepts user data
//   TX_DONE     tx buffer empty and the handshake is not in flight
//   RX_READY    rx buffer nonempty or a FIN was received
//   LINK_RESET  a RST was processed
EventMask update_events(const Socket& socket);

// Events guaranteed to be present in update_events() for *every* socket
// in the given state, independent of buffer contents. This is the
// event predicate the state-level closure algorithms reason with.
EventMask events_certain(TcpState state);

// All states one arriving segment can move a socket in `state` to,
// found by brute force over the full trigger alphabet: all 32 flag
// sets, seq/ack values around the tracked ones, representative payload
// lengths.
StateSet segment_successors(TcpState state,
                            EngineDefect defect = EngineDefect::None);

// Reflexive transitive closure of the one-segment relation, bounded at
// `depth` applications. Three suffices for this automaton (the longest
// receive-only path runs SYN_SENT -> SYN_RECEIVED -> ESTABLISHED ->
// CLOSE_WAIT); the conformance checker verifies depth 3 is a fixpoint.
StateSet reachable_states_depth(TcpState start, int depth,
                                EngineDefect defect = EngineDefect::None);
StateSet reachable_states(TcpState start);

// States a socket can be in when an event wait for `mask` completes,
// starting from `start`: walks the one-segment closure level by level
// and stops once some reachable state is certain to raise a wanted
// event. Empty result means the event cannot complete within the
// closure bound, which is the caller's timeout path.
StateSet wait_for_events_states(TcpState start, EventMask mask);

// Canonical socket used by the enumeration sweeps: state as given,
// ports and sequence counters at fixed representative values.
Socket make_sweep_socket(TcpState state);

}  // namespace tcpconform
