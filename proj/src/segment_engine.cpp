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

#include "tcpconform/segment_engine.hpp"

#include <cassert>

namespace tcpconform {

std::vector<TcpState> StateSet::to_vector() const {
  std::vector<TcpState> out;
  for (TcpState s : kAllStates) {
    if (contains(s)) out.push_back(s);
  }
  return out;
}

std::string StateSet::to_string() const {
  std::string out = "{";
  for (TcpState s : to_vector()) {
    if (out.size() > 1) out += ", ";
    out += state_name(s);
  }
  out += "}";
  return out;
}

namespace {

bool has(const Segment& segment, TcpFlag flag) {
  return segment.flags.has(flag);
}

// Responses carry the socket's current counters and are addressed back
// to the segment source.
void queue_response(Socket& socket, FlagSet flags) {
  socket.out_queue.push_back(make_segment(socket.local_port,
                                          socket.remote_port, socket.snd_nxt,
                                          socket.rcv_nxt, flags));
}

void queue_reack(Socket& socket) { queue_response(socket, {TcpFlag::Ack}); }

// Connection teardown on an arriving RST. Buffers are flushed so a
// pending transmit wait can complete and observe the reset.
void do_reset(Socket& socket) {
  change_state(socket, TcpState::Closed);
  socket.reset_flag = true;
  socket.tx_buffer.clear();
  socket.rx_buffer.clear();
  socket.fin_received = false;
  socket.unacked_control.reset();
}

// Orderly teardown (LAST_ACK -> CLOSED). Same flush, no reset mark.
void do_close(Socket& socket) {
  change_state(socket, TcpState::Closed);
  socket.tx_buffer.clear();
  socket.rx_buffer.clear();
  socket.unacked_control.reset();
}

void accept_payload(Socket& socket, const Segment& segment) {
  if (segment.length == 0) return;
  if (segment.payload.size() == segment.length) {
    socket.rx_buffer.insert(socket.rx_buffer.end(), segment.payload.begin(),
                            segment.payload.end());
  } else {
    // Length-only segment (enumeration sweeps): content is immaterial.
    socket.rx_buffer.insert(socket.rx_buffer.end(), segment.length, 0);
  }
}

bool in_order(const Socket& socket, const Segment& segment) {
  return segment.seq_num == socket.rcv_nxt;
}

// True when the segment acknowledges everything sent so far.
bool acks_all(const Socket& socket, const Segment& segment) {
  return has(segment, TcpFlag::Ack) && segment.ack_num == socket.snd_nxt;
}

void drain_tx(Socket& socket) {
  socket.tx_buffer.clear();
  socket.unacked_control.reset();
  socket.control_retransmits = 0;
}

// Seeded handler bugs. Returns the state the broken handler would force,
// bypassing the per-flag logic below.
std::optional<TcpState> defect_forced_target(EngineDefect defect,
                                             TcpState state,
                                             const Segment& segment) {
  switch (defect) {
    case EngineDefect::None:
      break;
    case EngineDefect::CloseWaitFinToFinWait1:
      if (state == TcpState::CloseWait && has(segment, TcpFlag::Fin))
        return TcpState::FinWait1;
      break;
    case EngineDefect::EstablishedFinToFinWait1:
      if (state == TcpState::Established && has(segment, TcpFlag::Fin))
        return TcpState::FinWait1;
      break;
    case EngineDefect::FinWait2FinToClosed:
      if (state == TcpState::FinWait2 && has(segment, TcpFlag::Fin))
        return TcpState::Closed;
      break;
  }
  return std::nullopt;
}

// -- the tcpState<Name> handler family ---------------------------------

void tcp_state_closed(Socket&, const Segment&) {
  // No connection state at all: silently discard.
}

void tcp_state_listen(Socket& socket, const Segment& segment) {
  // A listener discards RSTs.
  if (has(segment, TcpFlag::Rst)) return;
  if (has(segment, TcpFlag::Syn)) {
    socket.rcv_nxt = segment.seq_num + 1;
    socket.remote_port = segment.src_port;
    queue_response(socket, {TcpFlag::Syn, TcpFlag::Ack});
    socket.unacked_control = socket.out_queue.back();
    socket.snd_nxt += 1;  // SYN occupies one sequence number
    change_state(socket, TcpState::SynReceived);
  }
  // Anything else is not addressed to a listener; discard.
}

void tcp_state_syn_sent(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (has(segment, TcpFlag::Syn) && has(segment, TcpFlag::Ack)) {
    if (segment.ack_num == socket.snd_nxt) {
      socket.rcv_nxt = segment.seq_num + 1;
      drain_tx(socket);
      queue_reack(socket);
      change_state(socket, TcpState::Established);
    }
    // A SYN+ACK that does not acknowledge our SYN is stale; ignore.
    return;
  }
  if (has(segment, TcpFlag::Syn)) {
    // Simultaneous open: both sides sent SYN.
    socket.rcv_nxt = segment.seq_num + 1;
    queue_reack(socket);
    change_state(socket, TcpState::SynReceived);
    return;
  }
  // ACK or FIN before any SYN from the peer: ignore.
}

void tcp_state_syn_received(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (acks_all(socket, segment)) {
    // Our SYN is acknowledged: connection setup is finished.
    drain_tx(socket);
    change_state(socket, TcpState::Established);
  }
}

void tcp_state_established(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (has(segment, TcpFlag::Syn)) return;  // stray SYN on a live connection
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (acks_all(socket, segment)) drain_tx(socket);
  if (has(segment, TcpFlag::Fin)) {
    accept_payload(socket, segment);
    socket.rcv_nxt = segment.seq_num + segment.length + 1;
    socket.fin_received = true;
    queue_reack(socket);
    change_state(socket, TcpState::CloseWait);
    return;
  }
  if (segment.length > 0) {
    accept_payload(socket, segment);
    socket.rcv_nxt += segment.length;
    queue_reack(socket);
  }
}

void tcp_state_fin_wait_1(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  const bool our_fin_acked = acks_all(socket, segment);
  if (our_fin_acked) drain_tx(socket);
  if (has(segment, TcpFlag::Fin)) {
    accept_payload(socket, segment);
    socket.rcv_nxt = segment.seq_num + segment.length + 1;
    socket.fin_received = true;
    queue_reack(socket);
    // FIN together with the acknowledgement of our own FIN skips
    // CLOSING and lands directly in TIME_WAIT.
    change_state(socket,
                 our_fin_acked ? TcpState::TimeWait : TcpState::Closing);
    return;
  }
  if (segment.length > 0) {
    accept_payload(socket, segment);
    socket.rcv_nxt += segment.length;
    queue_reack(socket);
  }
  if (our_fin_acked) change_state(socket, TcpState::FinWait2);
}

void tcp_state_fin_wait_2(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (has(segment, TcpFlag::Fin)) {
    accept_payload(socket, segment);
    socket.rcv_nxt = segment.seq_num + segment.length + 1;
    socket.fin_received = true;
    queue_reack(socket);
    change_state(socket, TcpState::TimeWait);
    return;
  }
  if (segment.length > 0) {
    accept_payload(socket, segment);
    socket.rcv_nxt += segment.length;
    queue_reack(socket);
  }
}

void tcp_state_close_wait(Socket& socket, const Segment& segment) {
  // The peer already closed its side. Only a RST can move the state
  // from here; the transition to LAST_ACK needs an action by the user.
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (acks_all(socket, segment)) drain_tx(socket);
  // Data after the peer's FIN is not accepted.
}

void tcp_state_closing(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (acks_all(socket, segment)) {
    drain_tx(socket);
    change_state(socket, TcpState::TimeWait);
  }
}

void tcp_state_last_ack(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  if (!in_order(socket, segment)) {
    queue_reack(socket);
    return;
  }
  if (acks_all(socket, segment)) do_close(socket);
}

void tcp_state_time_wait(Socket& socket, const Segment& segment) {
  if (has(segment, TcpFlag::Rst)) {
    do_reset(socket);
    return;
  }
  // A retransmitted FIN from the peer: acknowledge it again.
  if (has(segment, TcpFlag::Fin)) queue_reack(socket);
}

}  // namespace

void handle_in_state(Socket& socket, const Segment& segment,
                     EngineDefect defect) {
  if (auto forced = defect_forced_target(defect, socket.state, segment)) {
    change_state(socket, *forced);
    return;
  }
  // Check current state.
  switch (socket.state) {
    case TcpState::Closed:
      tcp_state_closed(socket, segment);
      break;
    case TcpState::Listen:
      tcp_state_listen(socket, segment);
      break;
    case TcpState::SynSent:
      tcp_state_syn_sent(socket, segment);
      break;
    case TcpState::SynReceived:
      tcp_state_syn_received(socket, segment);
      break;
    case TcpState::Established:
      tcp_state_established(socket, segment);
      break;
    case TcpState::FinWait1:
      tcp_state_fin_wait_1(socket, segment);
      break;
    case TcpState::FinWait2:
      tcp_state_fin_wait_2(socket, segment);
      break;
    case TcpState::CloseWait:
      tcp_state_close_wait(socket, segment);
      break;
    case TcpState::Closing:
      tcp_state_closing(socket, segment);
      break;
    case TcpState::LastAck:
      tcp_state_last_ack(socket, segment);
      break;
    case TcpState::TimeWait:
      tcp_state_time_wait(socket, segment);
      break;
    default:
      // Corrupted state value. Recover to CLOSED (outside the modeled
      // relation, so not via change_state) and discard the segment.
      socket.state = TcpState::Closed;
      break;
  }
}

void process_one_segment(Socket& socket, const Segment& segment,
                         EngineDefect defect) {
  if (segment.dest_port != socket.local_port) return;
  handle_in_state(socket, segment, defect);
  socket.event_flags = update_events(socket);
}

EventMask update_events(const Socket& socket) {
  EventMask mask;
  const TcpState s = socket.state;
  if (s == TcpState::Established || s == TcpState::CloseWait) {
    mask = mask | EventMask{SocketEvent::Connected, SocketEvent::TxReady};
  }
  if (s == TcpState::Closed) mask = mask | EventMask{SocketEvent::Closed};
  if (socket.tx_buffer.empty() && s != TcpState::SynSent &&
      s != TcpState::SynReceived) {
    mask = mask | EventMask{SocketEvent::TxDone};
  }
  if (!socket.rx_buffer.empty() || socket.fin_received) {
    mask = mask | EventMask{SocketEvent::RxReady};
  }
  if (socket.reset_flag) mask = mask | EventMask{SocketEvent::LinkReset};
  return mask;
}

EventMask events_certain(TcpState state) {
  EventMask mask;
  switch (state) {
    case TcpState::Established:
    case TcpState::CloseWait:
      mask = mask | EventMask{SocketEvent::Connected, SocketEvent::TxReady};
      break;
    case TcpState::Closed:
      // Teardown flushes the buffers, so a closed socket always reports
      // transmission finished; a reset can only be observed here.
      mask = mask | EventMask{SocketEvent::Closed, SocketEvent::TxDone,
                              SocketEvent::LinkReset};
      break;
    default:
      break;
  }
  switch (state) {
    case TcpState::CloseWait:
    case TcpState::Closing:
    case TcpState::LastAck:
    case TcpState::TimeWait:
      // These states are only entered after the peer's FIN arrived.
      mask = mask | EventMask{SocketEvent::RxReady};
      break;
    default:
      break;
  }
  return mask;
}

Socket make_sweep_socket(TcpState state) {
  Socket socket;
  socket.descriptor = 1;
  socket.local_ip = IpAddr::parse("10.0.0.1").value();
  socket.local_port = 1000;
  socket.remote_ip = IpAddr::parse("10.0.0.2").value();
  socket.remote_port = 2000;
  socket.snd_nxt = 5000;
  socket.rcv_nxt = 9000;
  socket.state = state;
  return socket;
}

StateSet segment_successors(TcpState state, EngineDefect defect) {
  static constexpr std::int32_t kSeqOffsets[] = {-1, 0, 1};
  static constexpr std::int32_t kAckOffsets[] = {-1, 0, 1};
  static constexpr std::uint32_t kLengths[] = {0, 1, 1460};

  const Socket base = make_sweep_socket(state);
  StateSet result;
  for (std::uint8_t encoded = 0; encoded <= FlagSet::kMaxEncoded; ++encoded) {
    for (std::int32_t ds : kSeqOffsets) {
      for (std::int32_t da : kAckOffsets) {
        for (std::uint32_t length : kLengths) {
          Socket socket = base;
          Segment segment =
              make_segment(base.remote_port, base.local_port,
                           base.rcv_nxt + ds, base.snd_nxt + da,
                           FlagSet(encoded));
          segment.length = length;
          process_one_segment(socket, segment, defect);
          result.insert(socket.state);
        }
      }
    }
  }
  return result;
}

StateSet reachable_states_depth(TcpState start, int depth,
                                EngineDefect defect) {
  StateSet closure{start};
  StateSet last{start};
  for (int i = 1; i <= depth; ++i) {
    StateSet next;
    for (TcpState s : last.to_vector()) next |= segment_successors(s, defect);
    last = next;
    closure |= next;
  }
  return closure;
}

StateSet reachable_states(TcpState start) {
  return reachable_states_depth(start, 3);
}

StateSet wait_for_events_states(TcpState start, EventMask mask) {
  assert(!mask.empty());
  StateSet last{start};
  StateSet accumulated{start};
  if (events_certain(start).intersects(mask)) return accumulated;
  for (int i = 1; i <= 3; ++i) {
    StateSet next;
    for (TcpState s : last.to_vector()) next |= segment_successors(s);
    last = next;
    accumulated |= next;
    for (TcpState s : last.to_vector()) {
      if (events_certain(s).intersects(mask)) return accumulated;
    }
  }
  return StateSet{};
}

}  // namespace tcpconform
