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

#include "tcpconform/automaton.hpp"
#include "tcpconform/segment_engine.hpp"
#include "tcpconform/socket.hpp"

namespace tcpconform::test {

inline Socket basic_socket(TcpState state) {
  Socket socket = make_sweep_socket(state);
  return socket;
}

// Full-record comparison ignoring the non-comparable transition hook.
inline bool sockets_equivalent(const Socket& a, const Socket& b) {
  return to_model(a) == to_model(b) && a.descriptor == b.descriptor &&
         a.timeout == b.timeout && a.event_flags == b.event_flags &&
         a.tx_buffer == b.tx_buffer && a.rx_buffer == b.rx_buffer &&
         a.fin_received == b.fin_received && a.out_queue == b.out_queue &&
         a.unacked_control == b.unacked_control &&
         a.control_retransmits == b.control_retransmits;
}

// Independent closure oracle: breadth-first search over the declarative
// table restricted to segment-arrival edges, bounded at `depth`. Kept
// deliberately separate from the engine's brute-force enumeration.
inline StateSet bfs_closure_oracle(TcpState start, int depth) {
  StateSet closure{start};
  StateSet frontier{start};
  for (int i = 0; i < depth; ++i) {
    StateSet next;
    for (TcpState s : frontier.to_vector()) {
      next.insert(s);  // a non-matching segment leaves the state alone
      for (const TransitionEntry& e : transition_table().entries()) {
        if (e.from == s && e.kind == TransitionEntry::Kind::Segment) {
          next.insert(e.to);
        }
      }
    }
    frontier = next;
    closure |= next;
  }
  return closure;
}

}  // namespace tcpconform::test
