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

#include "tcpconform/harness.hpp"

#include <algorithm>

#include "tcpconform/automaton.hpp"

namespace tcpconform {

namespace {

constexpr int kMaxControlRetransmits = 5;

std::string hex_of(const std::deque<std::uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out += digits[b >> 4];
    out += digits[b & 0xf];
  }
  return out;
}

std::string segment_detail(const Segment& s) {
  return "src=" + std::to_string(s.src_port) +
         " dst=" + std::to_string(s.dest_port) +
         " seq=" + std::to_string(s.seq_num) +
         " ack=" + std::to_string(s.ack_num) +
         " len=" + std::to_string(s.length);
}

}  // namespace

Simulator::Simulator(RunOptions options)
    : options_(options), rng_(options.seed) {
  endpoints_[0].addr = IpAddr::parse("10.0.0.1").value();
  endpoints_[1].addr = IpAddr::parse("10.0.0.2").value();
  for (Endpoint& ep : endpoints_) {
    ep.sockets.resize(options_.socket_capacity);
  }
}

IpAddr Simulator::endpoint_addr(int ep) const { return endpoints_[ep].addr; }

void Simulator::load_script(int ep, Script script) {
  for (ScriptOp& op : script) {
    endpoints_[ep].user.queue.push_back(std::move(op));
  }
}

const Socket* Simulator::find_socket(int ep, SockDescriptor sd) const {
  for (const HarnessSocket& hs : endpoints_[ep].sockets) {
    if ((hs.in_use || hs.detached) && hs.socket.descriptor == sd) {
      return &hs.socket;
    }
  }
  return nullptr;
}

bool Simulator::scripts_done() const {
  for (const Endpoint& ep : endpoints_) {
    if (!ep.user.queue.empty() || ep.user.pending || ep.user.wait ||
        ep.user.sleep_until) {
      return false;
    }
  }
  return true;
}

std::uint32_t Simulator::activity_token(int ep, Role role) const {
  return static_cast<std::uint32_t>(ep * 3 + static_cast<int>(role) + 1);
}

void Simulator::push_trace(TraceRecord record) {
  trace_.push_back(std::move(record));
}

void Simulator::abort_run(const std::string& reason) {
  aborted_ = true;
  abort_reason_ = reason;
  for (int ep = 0; ep < 2; ++ep) {
    const UserTask& task = endpoints_[ep].user;
    abort_reason_ += "; ep" + std::to_string(ep) +
                     " queue=" + std::to_string(task.queue.size()) +
                     (task.wait ? " waiting" : "") +
                     (task.sleep_until ? " sleeping" : "") +
                     " inbound=" + std::to_string(endpoints_[ep].inbound.size());
  }
}

void Simulator::hook_transitions(int ep, HarnessSocket& hs) {
  const SockDescriptor sd = hs.socket.descriptor;
  hs.socket.on_transition = [this, ep, sd](TcpState from, TcpState to) {
    TraceRecord record;
    record.t = now_;
    record.ep = ep;
    record.kind = TraceKind::StateChange;
    record.from = from;
    record.to = to;
    record.detail = "sd=" + std::to_string(sd);
    push_trace(std::move(record));
  };
}

// Per-socket mutual exclusion token. Single-threaded scheduling makes
// real blocking unnecessary; the token exists to catch any harness bug
// where two activities would have held the same socket at once.
class SocketGuard {
 public:
  SocketGuard(Socket& socket, std::uint32_t token,
              std::vector<std::string>& errors)
      : socket_(socket) {
    if (socket_.guard_owner != 0) {
      errors.push_back("guard conflict on sd=" +
                       std::to_string(socket_.descriptor) + ": owner " +
                       std::to_string(socket_.guard_owner) + " vs " +
                       std::to_string(token));
    }
    socket_.guard_owner = token;
  }
  ~SocketGuard() { socket_.guard_owner = 0; }

  SocketGuard(const SocketGuard&) = delete;
  SocketGuard& operator=(const SocketGuard&) = delete;

 private:
  Socket& socket_;
};

Simulator::HarnessSocket* Simulator::slot_for(int ep, SockDescriptor sd) {
  for (HarnessSocket& hs : endpoints_[ep].sockets) {
    if ((hs.in_use || hs.detached) && hs.socket.descriptor == sd) return &hs;
  }
  return nullptr;
}

Simulator::HarnessSocket* Simulator::slot_for_port(int ep, Port port) {
  for (HarnessSocket& hs : endpoints_[ep].sockets) {
    if ((hs.in_use || hs.detached) && hs.socket.local_port == port) return &hs;
  }
  return nullptr;
}

void Simulator::send_to_peer(int ep, const Segment& segment,
                             const std::string& detail) {
  TraceRecord record;
  record.t = now_;
  record.ep = ep;
  record.kind = TraceKind::SegmentSent;
  record.flags = segment.flags;
  record.detail = segment_detail(segment);
  if (!detail.empty()) record.detail += " " + detail;
  push_trace(std::move(record));
  endpoints_[1 - ep].inbound.push_back(
      {segment, now_ + options_.timers.tick});
}

void Simulator::sync_timers(int ep, HarnessSocket& hs) {
  (void)ep;
  const Socket& s = hs.socket;
  if (s.state == TcpState::TimeWait) {
    if (!hs.tw_deadline) {
      hs.tw_deadline = now_ + options_.timers.time_wait_duration();
    }
  } else {
    hs.tw_deadline.reset();
  }
  if (s.state == TcpState::SynReceived) {
    if (!hs.sr_deadline) {
      hs.sr_deadline = now_ + options_.timers.syn_received_timeout;
    }
  } else {
    hs.sr_deadline.reset();
  }
  if (s.unacked_control) {
    if (!hs.rt_deadline) {
      hs.rt_deadline = now_ + options_.timers.retransmission_timeout;
    }
  } else {
    hs.rt_deadline.reset();
  }
}

void Simulator::reclaim_if_drained(HarnessSocket& hs) {
  if (hs.detached && hs.socket.state == TcpState::Closed) {
    hs.detached = false;
    hs.in_use = false;
  }
}

void Simulator::record_violation(int ep, const TransitionViolation& violation,
                                 const std::string& where) {
  violations_.push_back({ep, violation.from(), violation.to(), where});
}

void Simulator::eval_waiter(int ep, HarnessSocket& hs) {
  UserTask& task = endpoints_[ep].user;
  if (!task.wait || task.wait->fired) return;
  if (task.wait->sd != hs.socket.descriptor) return;
  const EventMask events = update_events(hs.socket);
  const EventMask hit = events & task.wait->mask;
  if (hit.empty()) return;
  task.wait->fired = true;
  task.wait->fired_events = hit;
  // Direct handoff: the parked user task owns the next access, so the
  // state it observes on resume is the state at the instant the event
  // was raised.
  hs.handoff_to_user = true;

  TraceRecord record;
  record.t = now_;
  record.ep = ep;
  record.kind = TraceKind::EventRaised;
  record.detail = event_mask_name(hit) + " sd=" +
                  std::to_string(hs.socket.descriptor);
  push_trace(std::move(record));
}

void Simulator::check_wait_soundness(int ep, const WaitState& wait,
                                     TcpState observed) {
  if (wait.fired) {
    const StateSet sound = wait_for_events_states(wait.entry_state, wait.mask);
    if (!sound.contains(observed)) {
      soundness_errors_.push_back(
          "ep" + std::to_string(ep) + " wait on " +
          event_mask_name(wait.mask) + " from " +
          std::string(state_name(wait.entry_state)) + " returned in " +
          std::string(state_name(observed)) + ", outside " +
          sound.to_string());
    }
  }
  const StateSet closure = reachable_states(wait.entry_state);
  if (!closure.contains(observed)) {
    soundness_errors_.push_back(
        "ep" + std::to_string(ep) + " state " +
        std::string(state_name(observed)) +
        " on guard re-acquisition not in closure of " +
        std::string(state_name(wait.entry_state)));
  }
}

void Simulator::check_reacquire_closure(int ep, HarnessSocket& hs,
                                        const std::string& where) {
  const StateSet closure = reachable_states(hs.last_user_state);
  if (!closure.contains(hs.socket.state)) {
    soundness_errors_.push_back(
        "ep" + std::to_string(ep) + " " + where + ": state " +
        std::string(state_name(hs.socket.state)) + " not in closure " +
        closure.to_string() + " of " +
        std::string(state_name(hs.last_user_state)));
  }
}

// ---------------------------------------------------------------------
// Scheduling
// ---------------------------------------------------------------------

bool Simulator::user_runnable(int ep) const {
  const UserTask& task = endpoints_[ep].user;
  if (task.wait) {
    return task.wait->fired || now_ >= task.wait->deadline;
  }
  if (task.sleep_until) return now_ >= *task.sleep_until;
  return !task.queue.empty();
}

bool Simulator::receiver_runnable(int ep) const {
  const Endpoint& endpoint = endpoints_[ep];
  if (endpoint.inbound.empty()) return false;
  const InFlight& head = endpoint.inbound.front();
  if (head.deliver_at > now_) return false;
  for (const HarnessSocket& hs : endpoint.sockets) {
    if ((hs.in_use || hs.detached) &&
        hs.socket.local_port == head.segment.dest_port) {
      return !hs.handoff_to_user;
    }
  }
  return true;  // no matching socket: the drop action is runnable
}

bool Simulator::timer_runnable(int ep) const {
  for (const HarnessSocket& hs : endpoints_[ep].sockets) {
    if (!(hs.in_use || hs.detached) || hs.handoff_to_user) continue;
    if (hs.tw_deadline && now_ >= *hs.tw_deadline) return true;
    if (hs.sr_deadline && now_ >= *hs.sr_deadline) return true;
    if (hs.rt_deadline && now_ >= *hs.rt_deadline) return true;
  }
  return false;
}

std::optional<VirtualTime> Simulator::next_deadline() const {
  std::optional<VirtualTime> next;
  auto consider = [&next](std::optional<VirtualTime> candidate) {
    if (!candidate) return;
    if (!next || *candidate < *next) next = candidate;
  };
  for (const Endpoint& endpoint : endpoints_) {
    if (!endpoint.inbound.empty()) {
      consider(endpoint.inbound.front().deliver_at);
    }
    const UserTask& task = endpoint.user;
    if (task.wait && !task.wait->fired) consider(task.wait->deadline);
    if (task.sleep_until) consider(*task.sleep_until);
    for (const HarnessSocket& hs : endpoint.sockets) {
      if (!(hs.in_use || hs.detached)) continue;
      consider(hs.tw_deadline);
      consider(hs.sr_deadline);
      consider(hs.rt_deadline);
    }
  }
  return next;
}

bool Simulator::step() {
  if (aborted_) return false;
  if (++actions_ > options_.max_actions) {
    abort_run("no progress within the action budget");
    return false;
  }

  // Fired event waits resume before anything else touches their socket.
  std::vector<int> fired;
  for (int ep = 0; ep < 2; ++ep) {
    const UserTask& task = endpoints_[ep].user;
    if (task.wait && task.wait->fired) fired.push_back(ep);
  }
  if (!fired.empty()) {
    const int ep = fired[rng_() % fired.size()];
    run_user_action(ep);
    return true;
  }

  struct Candidate {
    int ep;
    Role role;
  };
  std::vector<Candidate> candidates;
  for (int ep = 0; ep < 2; ++ep) {
    if (user_runnable(ep)) candidates.push_back({ep, Role::User});
    if (receiver_runnable(ep)) candidates.push_back({ep, Role::Receiver});
    if (timer_runnable(ep)) candidates.push_back({ep, Role::Timer});
  }

  if (!candidates.empty()) {
    const Candidate pick = candidates[rng_() % candidates.size()];
    switch (pick.role) {
      case Role::User: run_user_action(pick.ep); break;
      case Role::Receiver: run_receiver_action(pick.ep); break;
      case Role::Timer: run_timer_action(pick.ep); break;
    }
    return true;
  }

  const auto deadline = next_deadline();
  if (!deadline) return false;
  if (*deadline <= now_) {
    abort_run("scheduler stall at t=" + std::to_string(now_));
    return false;
  }
  now_ = *deadline;
  return true;
}

void Simulator::run_to_quiescence() {
  while (step()) {
  }
  if (!aborted_ && !scripts_done()) {
    abort_run("deadlock: scripts unfinished with no pending activity");
  }
}

OpResult Simulator::run_op(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  task.queue.push_back(op);
  auto op_inflight = [&task]() {
    return !task.queue.empty() || task.pending || task.wait ||
           task.sleep_until;
  };
  while (op_inflight() && step()) {
  }
  OpResult fallback;
  fallback.kind = op.kind;
  fallback.error = ErrorCode::InvalidSocket;
  return task.last_result.value_or(fallback);
}

WaitOutcome Simulator::wait_for_events(int ep, SockDescriptor sd,
                                       EventMask mask, Duration timeout) {
  UserTask& task = endpoints_[ep].user;
  task.last_wait.reset();
  HarnessSocket* hs = slot_for(ep, sd);
  if (hs == nullptr) {
    return WaitOutcome{ErrorCode::InvalidSocket, EventMask{},
                       TcpState::Closed};
  }
  PendingOp pending;
  pending.wait_only = true;
  pending.op.kind = ScriptOpKind::Sleep;  // placeholder, unused
  task.pending = pending;
  register_wait(ep, sd, mask, timeout);
  while (!task.last_wait && step()) {
  }
  return task.last_wait.value_or(
      WaitOutcome{ErrorCode::Timeout, EventMask{}, hs->socket.state});
}

// ---------------------------------------------------------------------
// Receiver task
// ---------------------------------------------------------------------

void Simulator::run_receiver_action(int ep) {
  Endpoint& endpoint = endpoints_[ep];
  const InFlight inflight = endpoint.inbound.front();
  endpoint.inbound.pop_front();
  const Segment& segment = inflight.segment;

  HarnessSocket* hs = slot_for_port(ep, segment.dest_port);

  TraceRecord record;
  record.t = now_;
  record.ep = ep;
  record.kind = TraceKind::SegmentReceived;
  record.flags = segment.flags;
  record.detail = segment_detail(segment);
  record.detail += hs == nullptr
                       ? " dropped"
                       : " sd=" + std::to_string(hs->socket.descriptor);
  push_trace(std::move(record));

  if (hs == nullptr) return;

  SocketGuard guard(hs->socket, activity_token(ep, Role::Receiver),
                    soundness_errors_);
  try {
    process_one_segment(hs->socket, segment);
  } catch (const TransitionViolation& violation) {
    record_violation(ep, violation, "segment-handler");
  }

  // Passive-open plumbing: the engine learns the remote port from the
  // SYN; the remote address comes from the channel.
  if (hs->socket.state == TcpState::SynReceived &&
      !hs->socket.remote_ip.is_initialized()) {
    hs->socket.remote_ip = endpoints_[1 - ep].addr;
  }

  while (!hs->socket.out_queue.empty()) {
    send_to_peer(ep, hs->socket.out_queue.front(), "");
    hs->socket.out_queue.pop_front();
  }

  sync_timers(ep, *hs);
  eval_waiter(ep, *hs);
  reclaim_if_drained(*hs);
}

// ---------------------------------------------------------------------
// Timer task
// ---------------------------------------------------------------------

std::vector<std::string> Simulator::timer_task_tick(int ep) {
  std::vector<std::string> fired;
  Endpoint& endpoint = endpoints_[ep];
  for (HarnessSocket& hs : endpoint.sockets) {
    if (!(hs.in_use || hs.detached) || hs.handoff_to_user) continue;
    Socket& socket = hs.socket;
    const std::string sd = "sd=" + std::to_string(socket.descriptor);

    if (hs.tw_deadline && now_ >= *hs.tw_deadline) {
      SocketGuard guard(socket, activity_token(ep, Role::Timer),
                        soundness_errors_);
      push_trace({now_, ep, TraceKind::TimerFired, {}, {}, {},
                  "2MSL " + sd});
      try {
        change_state(socket, TcpState::Closed);
        socket.tx_buffer.clear();
        socket.rx_buffer.clear();
        socket.unacked_control.reset();
      } catch (const TransitionViolation& violation) {
        record_violation(ep, violation, "time-wait-timer");
      }
      hs.tw_deadline.reset();
      sync_timers(ep, hs);
      eval_waiter(ep, hs);
      reclaim_if_drained(hs);
      fired.push_back("2MSL " + sd);
      continue;
    }

    if (hs.sr_deadline && now_ >= *hs.sr_deadline) {
      SocketGuard guard(socket, activity_token(ep, Role::Timer),
                        soundness_errors_);
      push_trace({now_, ep, TraceKind::TimerFired, {}, {}, {},
                  "SYN_RECEIVED " + sd});
      // Give up on the half-open connection: tell the peer and bail.
      send_to_peer(ep,
                   make_segment(socket.local_port, socket.remote_port,
                                socket.snd_nxt, socket.rcv_nxt,
                                {TcpFlag::Rst}),
                   "");
      try {
        change_state(socket, TcpState::Closed);
        socket.tx_buffer.clear();
        socket.rx_buffer.clear();
        socket.unacked_control.reset();
      } catch (const TransitionViolation& violation) {
        record_violation(ep, violation, "syn-received-timer");
      }
      hs.sr_deadline.reset();
      sync_timers(ep, hs);
      eval_waiter(ep, hs);
      reclaim_if_drained(hs);
      fired.push_back("SYN_RECEIVED " + sd);
      continue;
    }

    if (hs.rt_deadline && now_ >= *hs.rt_deadline) {
      SocketGuard guard(socket, activity_token(ep, Role::Timer),
                        soundness_errors_);
      if (socket.unacked_control &&
          socket.control_retransmits < kMaxControlRetransmits) {
        push_trace({now_, ep, TraceKind::TimerFired, {}, {}, {},
                    "RETRANSMIT " + sd});
        send_to_peer(ep, *socket.unacked_control, "retransmit");
        socket.control_retransmits += 1;
        hs.rt_deadline = now_ + options_.timers.retransmission_timeout;
        fired.push_back("RETRANSMIT " + sd);
      } else {
        hs.rt_deadline.reset();
      }
    }
  }
  return fired;
}

void Simulator::run_timer_action(int ep) { timer_task_tick(ep); }

// ---------------------------------------------------------------------
// User task
// ---------------------------------------------------------------------

void Simulator::run_user_action(int ep) {
  UserTask& task = endpoints_[ep].user;

  if (task.wait) {
    if (task.wait->fired || now_ >= task.wait->deadline) {
      const WaitState wait = *task.wait;
      task.wait.reset();
      if (HarnessSocket* hs = slot_for(ep, wait.sd)) {
        hs->handoff_to_user = false;
      }
      finish_after_wait(ep, wait);
    }
    return;
  }

  if (task.sleep_until) {
    if (now_ >= *task.sleep_until) task.sleep_until.reset();
    return;
  }

  if (!task.queue.empty()) {
    const ScriptOp op = task.queue.front();
    task.queue.pop_front();
    start_op(ep, op);
  }
}

void Simulator::complete_op(int ep, OpResult result,
                            const std::string& detail) {
  UserTask& task = endpoints_[ep].user;
  task.pending.reset();
  if (HarnessSocket* hs = slot_for(ep, result.sd)) {
    hs->last_user_state = hs->socket.state;
  }

  TraceRecord record;
  record.t = now_;
  record.ep = ep;
  record.kind = TraceKind::UserCall;
  record.detail = script_op_name(result.kind) +
                  " sd=" + std::to_string(result.sd) + " " +
                  std::string(error_name(result.error));
  if (!detail.empty()) record.detail += " " + detail;
  push_trace(std::move(record));

  task.last_result = std::move(result);
}

void Simulator::register_wait(int ep, SockDescriptor sd, EventMask mask,
                              Duration timeout) {
  UserTask& task = endpoints_[ep].user;
  HarnessSocket* hs = slot_for(ep, sd);
  WaitState wait;
  wait.sd = sd;
  wait.mask = mask;
  wait.deadline = now_ + timeout;
  wait.entry_state = hs->socket.state;

  // Already satisfied: the guard is never released.
  const EventMask hit = update_events(hs->socket) & mask;
  if (!hit.empty()) {
    wait.fired = true;
    wait.fired_events = hit;
    push_trace({now_, ep, TraceKind::EventRaised, {}, {}, {},
                event_mask_name(hit) + " sd=" + std::to_string(sd)});
    finish_after_wait(ep, wait);
    return;
  }
  task.wait = wait;
}

void Simulator::start_op(int ep, const ScriptOp& op) {
  try {
    switch (op.kind) {
      case ScriptOpKind::Open: op_open(ep, op); break;
      case ScriptOpKind::Connect: op_connect(ep, op); break;
      case ScriptOpKind::Accept: op_accept(ep, op); break;
      case ScriptOpKind::Send: op_send(ep, op); break;
      case ScriptOpKind::Receive: op_receive(ep, op); break;
      case ScriptOpKind::Shutdown: op_shutdown(ep, op); break;
      case ScriptOpKind::Close: op_close(ep, op); break;
      case ScriptOpKind::Sleep:
        endpoints_[ep].user.sleep_until = now_ + op.ticks;
        break;
      case ScriptOpKind::InjectRst: op_inject_rst(ep, op); break;
      case ScriptOpKind::InjectSyn: op_inject_syn(ep, op.port); break;
    }
  } catch (const TransitionViolation& violation) {
    record_violation(ep, violation, script_op_name(op.kind));
    OpResult result;
    result.kind = op.kind;
    result.error = ErrorCode::NotConnected;
    result.sd = endpoints_[ep].user.current_sd;
    complete_op(ep, std::move(result),
                "transition-violation " +
                    std::string(state_name(violation.from())) + "->" +
                    std::string(state_name(violation.to())));
  }
}

void Simulator::op_open(int ep, const ScriptOp&) {
  Endpoint& endpoint = endpoints_[ep];
  HarnessSocket* slot = nullptr;
  for (HarnessSocket& hs : endpoint.sockets) {
    if (!hs.in_use && !hs.detached) {
      slot = &hs;
      break;
    }
  }
  OpResult result;
  result.kind = ScriptOpKind::Open;
  if (slot == nullptr) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result), "socket table exhausted");
    return;
  }

  Socket socket;
  socket.descriptor = next_descriptor_++;
  socket.timeout = options_.socket_timeout;
  socket.snd_nxt = 100 * socket.descriptor;
  slot->socket = std::move(socket);
  slot->in_use = true;
  slot->detached = false;
  slot->handoff_to_user = false;
  slot->tw_deadline.reset();
  slot->sr_deadline.reset();
  slot->rt_deadline.reset();
  slot->last_user_state = TcpState::Closed;
  hook_transitions(ep, *slot);

  endpoint.user.current_sd = slot->socket.descriptor;
  result.sd = slot->socket.descriptor;
  complete_op(ep, std::move(result));
}

void Simulator::op_connect(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Connect;
  result.sd = target;

  if (hs == nullptr || hs->socket.state != TcpState::Closed ||
      hs->socket.remote_ip.is_initialized()) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  if (!op.ip.is_initialized()) {
    result.error = ErrorCode::PortUnreachable;
    complete_op(ep, std::move(result));
    return;
  }

  check_reacquire_closure(ep, *hs, "connect entry");
  SocketGuard guard(hs->socket, activity_token(ep, Role::User),
                    soundness_errors_);
  Socket& socket = hs->socket;
  socket.local_port = next_ephemeral_++;
  socket.remote_port = op.port;
  change_state(socket, TcpState::SynSent);
  Segment syn = make_segment(socket.local_port, socket.remote_port,
                             socket.snd_nxt, 0, {TcpFlag::Syn});
  socket.snd_nxt += 1;
  socket.unacked_control = syn;
  socket.control_retransmits = 0;
  send_to_peer(ep, syn, "");
  sync_timers(ep, *hs);

  PendingOp pending;
  pending.op = op;
  task.pending = pending;
  register_wait(ep, socket.descriptor,
                {SocketEvent::Connected, SocketEvent::Closed},
                socket.timeout);
}

void Simulator::op_accept(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Accept;
  result.sd = target;

  HarnessSocket* port_owner = slot_for_port(ep, op.port);
  if (hs == nullptr || hs->socket.state != TcpState::Closed ||
      (port_owner != nullptr && port_owner != hs)) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }

  check_reacquire_closure(ep, *hs, "accept entry");
  SocketGuard guard(hs->socket, activity_token(ep, Role::User),
                    soundness_errors_);
  Socket& socket = hs->socket;
  socket.local_ip = endpoints_[ep].addr;
  socket.local_port = op.port;
  change_state(socket, TcpState::Listen);
  sync_timers(ep, *hs);

  PendingOp pending;
  pending.op = op;
  task.pending = pending;
  register_wait(ep, socket.descriptor,
                {SocketEvent::Connected, SocketEvent::Closed},
                socket.timeout);
}

void Simulator::op_send(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Send;
  result.sd = target;

  if (hs == nullptr) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  check_reacquire_closure(ep, *hs, "send entry");
  SocketGuard guard(hs->socket, activity_token(ep, Role::User),
                    soundness_errors_);
  Socket& socket = hs->socket;

  if (socket.reset_flag) {
    result.error = ErrorCode::ConnectionReset;
    complete_op(ep, std::move(result));
    return;
  }
  if (socket.state != TcpState::Established &&
      socket.state != TcpState::CloseWait) {
    result.error = ErrorCode::NotConnected;
    complete_op(ep, std::move(result));
    return;
  }
  if (op.data.empty()) {
    result.written = 0;
    complete_op(ep, std::move(result), "written=0");
    return;
  }

  socket.tx_buffer.insert(socket.tx_buffer.end(), op.data.begin(),
                          op.data.end());
  Segment data = make_segment(socket.local_port, socket.remote_port,
                              socket.snd_nxt, socket.rcv_nxt,
                              {TcpFlag::Psh, TcpFlag::Ack}, op.data);
  socket.snd_nxt += static_cast<SeqNum>(op.data.size());
  send_to_peer(ep, data, "");
  sync_timers(ep, *hs);

  result.written = op.data.size();
  complete_op(ep, std::move(result),
              "written=" + std::to_string(op.data.size()));
}

void Simulator::op_receive(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Receive;
  result.sd = target;

  if (hs == nullptr) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  check_reacquire_closure(ep, *hs, "receive entry");

  PendingOp pending;
  pending.op = op;
  task.pending = pending;
  register_wait(ep, hs->socket.descriptor, {SocketEvent::RxReady},
                hs->socket.timeout);
}

void Simulator::op_shutdown(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Shutdown;
  result.sd = target;

  if (hs == nullptr) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  check_reacquire_closure(ep, *hs, "shutdown entry");
  const TcpState entry = hs->socket.state;

  switch (entry) {
    case TcpState::FinWait1:
    case TcpState::FinWait2:
    case TcpState::Closing:
    case TcpState::LastAck:
    case TcpState::TimeWait:
    case TcpState::Listen:
      // Repeated or premature shutdown.
      result.error = ErrorCode::NotConnected;
      complete_op(ep, std::move(result));
      return;
    default:
      break;
  }

  // Make sure all the data has been sent out before the FIN goes.
  PendingOp pending;
  pending.op = op;
  pending.shutdown_entry = entry;
  task.pending = pending;
  register_wait(ep, hs->socket.descriptor, {SocketEvent::TxDone},
                hs->socket.timeout);
}

void Simulator::op_close(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::Close;
  result.sd = target;

  if (hs == nullptr) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  check_reacquire_closure(ep, *hs, "close entry");
  SocketGuard guard(hs->socket, activity_token(ep, Role::User),
                    soundness_errors_);
  Socket& socket = hs->socket;

  switch (socket.state) {
    case TcpState::Closed:
      hs->in_use = false;
      break;
    case TcpState::Listen:
    case TcpState::SynSent:
      change_state(socket, TcpState::Closed);
      hs->in_use = false;
      break;
    case TcpState::SynReceived:
    case TcpState::Established: {
      Segment fin = make_segment(socket.local_port, socket.remote_port,
                                 socket.snd_nxt, socket.rcv_nxt,
                                 {TcpFlag::Fin, TcpFlag::Ack});
      socket.snd_nxt += 1;
      socket.unacked_control = fin;
      socket.control_retransmits = 0;
      send_to_peer(ep, fin, "");
      change_state(socket, TcpState::FinWait1);
      hs->detached = true;
      hs->in_use = false;
      break;
    }
    case TcpState::CloseWait: {
      Segment fin = make_segment(socket.local_port, socket.remote_port,
                                 socket.snd_nxt, socket.rcv_nxt,
                                 {TcpFlag::Fin, TcpFlag::Ack});
      socket.snd_nxt += 1;
      socket.unacked_control = fin;
      socket.control_retransmits = 0;
      send_to_peer(ep, fin, "");
      change_state(socket, TcpState::LastAck);
      hs->detached = true;
      hs->in_use = false;
      break;
    }
    default:
      // Already closing in the background; just release the descriptor.
      hs->detached = true;
      hs->in_use = false;
      break;
  }
  sync_timers(ep, *hs);
  reclaim_if_drained(*hs);
  if (task.current_sd == target) task.current_sd = 0;
  complete_op(ep, std::move(result));
}

void Simulator::op_inject_rst(int ep, const ScriptOp& op) {
  UserTask& task = endpoints_[ep].user;
  const SockDescriptor target = op.sd != 0 ? op.sd : task.current_sd;
  HarnessSocket* hs = slot_for(ep, target);
  OpResult result;
  result.kind = ScriptOpKind::InjectRst;
  result.sd = target;

  if (op.port != 0) {
    // Explicit peer port: no backing socket needed.
    send_to_peer(ep, make_segment(55555, op.port, 42, 0, {TcpFlag::Rst}),
                 "injected");
    complete_op(ep, std::move(result));
    return;
  }
  if (hs == nullptr || hs->socket.remote_port == 0) {
    result.error = ErrorCode::InvalidSocket;
    complete_op(ep, std::move(result));
    return;
  }
  const Socket& socket = hs->socket;
  send_to_peer(ep,
               make_segment(socket.local_port, socket.remote_port,
                            socket.snd_nxt, socket.rcv_nxt, {TcpFlag::Rst}),
               "injected");
  complete_op(ep, std::move(result));
}

void Simulator::op_inject_syn(int ep, Port port) {
  OpResult result;
  result.kind = ScriptOpKind::InjectSyn;
  result.sd = 0;
  send_to_peer(ep, make_segment(55555, port, 42, 0, {TcpFlag::Syn}),
               "injected");
  complete_op(ep, std::move(result));
}

void Simulator::finish_after_wait(int ep, const WaitState& wait) {
  UserTask& task = endpoints_[ep].user;
  HarnessSocket* hs = slot_for(ep, wait.sd);
  if (hs == nullptr) {
    // The socket vanished mid-wait; nothing sensible to finish.
    task.pending.reset();
    OpResult lost;
    lost.error = ErrorCode::InvalidSocket;
    task.last_result = lost;
    return;
  }

  check_wait_soundness(ep, wait, hs->socket.state);
  hs->last_user_state = hs->socket.state;

  if (task.pending && task.pending->wait_only) {
    WaitOutcome outcome;
    outcome.error = wait.fired ? ErrorCode::NoError : ErrorCode::Timeout;
    outcome.fired = wait.fired_events;
    outcome.observed = hs->socket.state;
    task.pending.reset();
    task.last_wait = outcome;
    push_trace({now_, ep, TraceKind::UserCall, {}, {}, {},
                "wait sd=" + std::to_string(wait.sd) + " " +
                    std::string(error_name(outcome.error))});
    return;
  }

  if (!task.pending) {
    soundness_errors_.push_back("ep" + std::to_string(ep) +
                                " wait finished without a pending op");
    return;
  }
  const PendingOp pending = *task.pending;
  const ScriptOp& op = pending.op;

  SocketGuard guard(hs->socket, activity_token(ep, Role::User),
                    soundness_errors_);
  Socket& socket = hs->socket;
  OpResult result;
  result.kind = op.kind;
  result.sd = socket.descriptor;

  try {
    switch (op.kind) {
      case ScriptOpKind::Connect: {
        if (wait.fired && (socket.state == TcpState::Established ||
                           socket.state == TcpState::CloseWait)) {
          socket.local_ip = endpoints_[ep].addr;
          socket.remote_ip = endpoints_[1 - ep].addr;
          complete_op(ep, std::move(result));
        } else {
          result.error = socket.reset_flag ? ErrorCode::ConnectionReset
                                           : ErrorCode::Timeout;
          // Abort the attempt; the socket is reusable only for close.
          if (socket.state != TcpState::Closed) {
            change_state(socket, TcpState::Closed);
          }
          socket.remote_ip = IpAddr{};
          socket.remote_port = 0;
          socket.tx_buffer.clear();
          socket.rx_buffer.clear();
          socket.unacked_control.reset();
          sync_timers(ep, *hs);
          complete_op(ep, std::move(result));
        }
        break;
      }
      case ScriptOpKind::Accept: {
        if (wait.fired && (socket.state == TcpState::Established ||
                           socket.state == TcpState::CloseWait)) {
          complete_op(ep, std::move(result));
        } else {
          result.error = socket.reset_flag ? ErrorCode::ConnectionReset
                                           : ErrorCode::Timeout;
          if (socket.state != TcpState::Closed) {
            change_state(socket, TcpState::Closed);
          }
          socket.remote_ip = IpAddr{};
          socket.remote_port = 0;
          socket.tx_buffer.clear();
          socket.rx_buffer.clear();
          socket.unacked_control.reset();
          sync_timers(ep, *hs);
          complete_op(ep, std::move(result));
        }
        break;
      }
      case ScriptOpKind::Receive: {
        if (wait.fired) {
          result.data.assign(socket.rx_buffer.begin(), socket.rx_buffer.end());
          socket.rx_buffer.clear();
          const std::string detail =
              "data=" + (result.data.empty()
                             ? std::string("eof")
                             : hex_of(std::deque<std::uint8_t>(
                                   result.data.begin(), result.data.end())));
          complete_op(ep, std::move(result), detail);
        } else {
          result.error = ErrorCode::Timeout;
          complete_op(ep, std::move(result));
        }
        break;
      }
      case ScriptOpKind::Shutdown: {
        if (!wait.fired) {
          result.error = ErrorCode::Timeout;
          complete_op(ep, std::move(result));
          break;
        }
        // The state may have moved while the guard was released for the
        // flush wait; decide the close path from what the socket is NOW.
        // In buggy mode the branch chosen on entry is replayed blindly,
        // which is the defect the conformance suite hunts for.
        TcpState branch = socket.state;
        if (options_.buggy_shutdown &&
            (pending.shutdown_entry == TcpState::Established ||
             pending.shutdown_entry == TcpState::SynReceived)) {
          branch = pending.shutdown_entry;
        }
        switch (branch) {
          case TcpState::SynReceived:
          case TcpState::Established: {
            Segment fin = make_segment(socket.local_port, socket.remote_port,
                                       socket.snd_nxt, socket.rcv_nxt,
                                       {TcpFlag::Fin, TcpFlag::Ack});
            socket.snd_nxt += 1;
            socket.unacked_control = fin;
            socket.control_retransmits = 0;
            send_to_peer(ep, fin, "");
            change_state(socket, TcpState::FinWait1);
            sync_timers(ep, *hs);
            complete_op(ep, std::move(result));
            break;
          }
          case TcpState::CloseWait: {
            Segment fin = make_segment(socket.local_port, socket.remote_port,
                                       socket.snd_nxt, socket.rcv_nxt,
                                       {TcpFlag::Fin, TcpFlag::Ack});
            socket.snd_nxt += 1;
            socket.unacked_control = fin;
            socket.control_retransmits = 0;
            send_to_peer(ep, fin, "");
            change_state(socket, TcpState::LastAck);
            sync_timers(ep, *hs);
            complete_op(ep, std::move(result));
            break;
          }
          case TcpState::Closed:
            // Reset while we waited for the flush (or never connected).
            result.error = socket.reset_flag ? ErrorCode::ConnectionReset
                                             : ErrorCode::NotConnected;
            complete_op(ep, std::move(result));
            break;
          default:
            result.error = ErrorCode::NotConnected;
            complete_op(ep, std::move(result));
            break;
        }
        break;
      }
      default:
        soundness_errors_.push_back("ep" + std::to_string(ep) +
                                    " unexpected wait completion for op " +
                                    script_op_name(op.kind));
        task.pending.reset();
        break;
    }
  } catch (const TransitionViolation& violation) {
    record_violation(ep, violation, script_op_name(op.kind));
    result.error = ErrorCode::NotConnected;
    complete_op(ep, std::move(result),
                "transition-violation " +
                    std::string(state_name(violation.from())) + "->" +
                    std::string(state_name(violation.to())));
  }
}

RunResult Simulator::take_result() {
  RunResult result;
  result.trace = std::move(trace_);
  for (int ep = 0; ep < 2; ++ep) {
    for (const HarnessSocket& hs : endpoints_[ep].sockets) {
      if (hs.in_use || hs.detached) {
        result.final_models[ep].push_back(to_model(hs.socket));
      }
    }
  }
  result.violations = std::move(violations_);
  result.soundness_errors = std::move(soundness_errors_);
  result.aborted = aborted_;
  result.abort_reason = abort_reason_;
  return result;
}

RunResult run_pair(const Script& script_a, const Script& script_b,
                   const RunOptions& options) {
  Simulator sim(options);
  sim.load_script(Simulator::kEndpointA, script_a);
  sim.load_script(Simulator::kEndpointB, script_b);
  sim.run_to_quiescence();
  return sim.take_result();
}

}  // namespace tcpconform
