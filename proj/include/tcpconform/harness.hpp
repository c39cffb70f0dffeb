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
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcpconform/error.hpp"
#include "tcpconform/script.hpp"
#include "tcpconform/segment_engine.hpp"
#include "tcpconform/socket.hpp"
#include "tcpconform/trace.hpp"

namespace tcpconform {

// Protocol timers, in virtual ticks. TIME_WAIT lasts exactly two
// maximum segment lifetimes, which is why it is derived rather than
// stored.
struct TimerConfig {
  Duration msl = 30;
  Duration syn_received_timeout = 75;
  Duration retransmission_timeout = 20;
  Duration tick = 1;  // channel delivery latency

  constexpr Duration time_wait_duration() const { return 2 * msl; }
};

struct RunOptions {
  TimerConfig timers;
  std::uint64_t seed = 0;
  // Reproduces the original shutdown defect: the state re-check after
  // the transmit-flush wait is skipped.
  bool buggy_shutdown = false;
  Duration socket_timeout = 100;
  std::size_t socket_capacity = 8;
  // Deadlock/livelock backstop for the scheduler.
  std::uint64_t max_actions = 1'000'000;
};

struct ViolationRecord {
  int ep = 0;
  TcpState from = TcpState::Closed;
  TcpState to = TcpState::Closed;
  std::string where;
};

struct RunResult {
  std::vector<TraceRecord> trace;
  std::array<std::vector<SocketModel>, 2> final_models;
  std::vector<ViolationRecord> violations;
  // Breaches of the harness's own runtime contracts: guard discipline,
  // closure membership at guard re-acquisition, wait-return membership.
  std::vector<std::string> soundness_errors;
  bool aborted = false;
  std::string abort_reason;
};

// Result of one user-task operation, for callers driving an endpoint
// step by step.
struct OpResult {
  ScriptOpKind kind = ScriptOpKind::Open;
  ErrorCode error = ErrorCode::NoError;
  SockDescriptor sd = 0;
  std::size_t written = 0;
  std::vector<std::uint8_t> data;
};

struct WaitOutcome {
  ErrorCode error = ErrorCode::NoError;  // Timeout when nothing fired
  EventMask fired;
  TcpState observed = TcpState::Closed;
};

// Two endpoints joined by a lossless FIFO duplex channel, each running
// the three-task model: a user task executing scripted calls, a
// receiver task processing arriving segments, and a timer task. All
// three share the endpoint's sockets under a per-socket guard; event
// waits release the guard and re-acquire it when the receiver or timer
// task raises a wanted event.
//
// Scheduling is a seeded random choice among runnable activities, one
// atomic action at a time on a virtual clock, so a (scripts, timers,
// seed) triple always reproduces the identical trace.
class Simulator {
 public:
  explicit Simulator(RunOptions options);

  static constexpr int kEndpointA = 0;
  static constexpr int kEndpointB = 1;

  void load_script(int ep, Script script);

  // Runs until both scripts are exhausted, all segments are delivered
  // and no timer is pending, or the action budget trips.
  void run_to_quiescence();

  // Enqueues one op on the endpoint's user task and runs the world
  // until it completes. The peer's script keeps executing meanwhile.
  OpResult run_op(int ep, const ScriptOp& op);

  // The user-task event wait, exposed for direct use: releases the
  // socket's guard, returns once a wanted event is raised or the
  // timeout elapses, with the socket state observed at that moment.
  WaitOutcome wait_for_events(int ep, SockDescriptor sd, EventMask mask,
                              Duration timeout);

  // Fires every due timer of the endpoint; returns one description per
  // fired timer. Driven internally by the timer task.
  std::vector<std::string> timer_task_tick(int ep);

  VirtualTime now() const { return now_; }
  IpAddr endpoint_addr(int ep) const;
  const Socket* find_socket(int ep, SockDescriptor sd) const;
  bool scripts_done() const;

  const std::vector<TraceRecord>& trace() const { return trace_; }
  const std::vector<ViolationRecord>& violations() const {
    return violations_;
  }
  const std::vector<std::string>& soundness_errors() const {
    return soundness_errors_;
  }
  bool aborted() const { return aborted_; }

  RunResult take_result();

 private:
  struct HarnessSocket {
    Socket socket;
    bool in_use = false;
    // Descriptor released by the user, record kept until the close
    // sequence drains to CLOSED.
    bool detached = false;
    // Direct handoff: a wanted event fired, the parked user task owns
    // the next access to this socket.
    bool handoff_to_user = false;
    std::optional<VirtualTime> tw_deadline;
    std::optional<VirtualTime> sr_deadline;
    std::optional<VirtualTime> rt_deadline;
    // Anchor for the closure check at the next user-call entry.
    TcpState last_user_state = TcpState::Closed;
  };

  struct InFlight {
    Segment segment;
    VirtualTime deliver_at;
  };

  struct WaitState {
    SockDescriptor sd = 0;
    EventMask mask;
    VirtualTime deadline = 0;
    TcpState entry_state = TcpState::Closed;
    bool fired = false;
    EventMask fired_events;
  };

  struct PendingOp {
    ScriptOp op;
    bool wait_only = false;
    // Branch chosen by shutdown before its flush wait; buggy mode acts
    // on it without re-checking.
    TcpState shutdown_entry = TcpState::Closed;
  };

  struct UserTask {
    std::deque<ScriptOp> queue;
    std::optional<PendingOp> pending;
    std::optional<WaitState> wait;
    std::optional<VirtualTime> sleep_until;
    SockDescriptor current_sd = 0;
    std::optional<OpResult> last_result;
    std::optional<WaitOutcome> last_wait;
  };

  struct Endpoint {
    IpAddr addr;
    std::vector<HarnessSocket> sockets;
    std::deque<InFlight> inbound;
    UserTask user;
  };

  enum class Role : std::uint8_t { User = 0, Receiver = 1, Timer = 2 };

  // One scheduling step: execute a single atomic action, or advance the
  // clock to the next deadline. False once the world is quiescent.
  bool step();

  bool user_runnable(int ep) const;
  bool receiver_runnable(int ep) const;
  bool timer_runnable(int ep) const;
  std::optional<VirtualTime> next_deadline() const;

  void run_user_action(int ep);
  void run_receiver_action(int ep);
  void run_timer_action(int ep);

  void start_op(int ep, const ScriptOp& op);
  void finish_after_wait(int ep, const WaitState& wait);

  void op_open(int ep, const ScriptOp& op);
  void op_connect(int ep, const ScriptOp& op);
  void op_accept(int ep, const ScriptOp& op);
  void op_send(int ep, const ScriptOp& op);
  void op_receive(int ep, const ScriptOp& op);
  void op_shutdown(int ep, const ScriptOp& op);
  void op_close(int ep, const ScriptOp& op);
  void op_inject_rst(int ep, const ScriptOp& op);
  void op_inject_syn(int ep, Port port);

  void register_wait(int ep, SockDescriptor sd, EventMask mask,
                     Duration timeout);
  void complete_op(int ep, OpResult result, const std::string& detail = "");
  void eval_waiter(int ep, HarnessSocket& hs);
  void check_wait_soundness(int ep, const WaitState& wait, TcpState observed);
  void check_reacquire_closure(int ep, HarnessSocket& hs,
                               const std::string& where);

  HarnessSocket* slot_for(int ep, SockDescriptor sd);
  HarnessSocket* slot_for_port(int ep, Port port);
  std::uint32_t activity_token(int ep, Role role) const;
  void send_to_peer(int ep, const Segment& segment, const std::string& detail);
  void sync_timers(int ep, HarnessSocket& hs);
  void reclaim_if_drained(HarnessSocket& hs);
  void record_violation(int ep, const TransitionViolation& violation,
                        const std::string& where);
  void push_trace(TraceRecord record);
  void hook_transitions(int ep, HarnessSocket& hs);
  void abort_run(const std::string& reason);

  RunOptions options_;
  std::array<Endpoint, 2> endpoints_;
  VirtualTime now_ = 0;
  std::mt19937_64 rng_;
  SockDescriptor next_descriptor_ = 1;
  Port next_ephemeral_ = 40000;
  std::uint64_t actions_ = 0;

  std::vector<TraceRecord> trace_;
  std::vector<ViolationRecord> violations_;
  std::vector<std::string> soundness_errors_;
  bool aborted_ = false;
  std::string abort_reason_;
};

// Convenience wrapper: scripted endpoints, run to quiescence.
RunResult run_pair(const Script& script_a, const Script& script_b,
                   const RunOptions& options);

}  // namespace tcpconform
