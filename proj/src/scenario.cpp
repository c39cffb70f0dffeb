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

#include "tcpconform/scenario.hpp"

#include <algorithm>

#include "tcpconform/automaton.hpp"

namespace tcpconform {

namespace {

const char* kHandshakeScript = R"(
[a]
open
connect 10.0.0.2 7777
[b]
open
accept 7777
)";

const char* kTransferScript = R"(
[a]
open
connect 10.0.0.2 7777
send 68656c6c6f
[b]
open
accept 7777
receive
)";

const char* kOrderlyCloseScript = R"(
[a]
open
connect 10.0.0.2 7777
shutdown
[b]
open
accept 7777
receive
shutdown
close
)";

const char* kShutdownRaceFinScript = R"(
[a]
open
connect 10.0.0.2 7777
send 6869
shutdown
[b]
open
accept 7777
shutdown
)";

const char* kShutdownRaceRstScript = R"(
[a]
open
connect 10.0.0.2 7777
send 6869
shutdown
[b]
open
accept 7777
inject-rst
)";

struct Check {
  std::vector<std::string> failures;

  void expect(bool condition, const std::string& message) {
    if (!condition) failures.push_back(message);
  }
};

std::vector<FlagSet> sent_flags(const RunResult& run) {
  std::vector<FlagSet> out;
  for (const TraceRecord& r : run.trace) {
    if (r.kind == TraceKind::SegmentSent && r.flags &&
        r.detail.find("retransmit") == std::string::npos) {
      out.push_back(*r.flags);
    }
  }
  return out;
}

std::vector<std::pair<TcpState, TcpState>> state_changes(const RunResult& run,
                                                         int ep) {
  std::vector<std::pair<TcpState, TcpState>> out;
  for (const TraceRecord& r : run.trace) {
    if (r.kind == TraceKind::StateChange && r.ep == ep && r.from && r.to &&
        *r.from != *r.to) {
      out.emplace_back(*r.from, *r.to);
    }
  }
  return out;
}

bool final_state_is(const RunResult& run, int ep, TcpState state) {
  // A socket reclaimed after draining to CLOSED counts as CLOSED.
  if (run.final_models[ep].empty()) return state == TcpState::Closed;
  return std::all_of(run.final_models[ep].begin(), run.final_models[ep].end(),
                     [state](const SocketModel& m) { return m.state == state; });
}

void check_clean(Check& check, const RunResult& run) {
  check.expect(!run.aborted, "run aborted: " + run.abort_reason);
  check.expect(run.violations.empty(), "transition violations recorded");
  check.expect(run.soundness_errors.empty(),
               run.soundness_errors.empty()
                   ? ""
                   : "soundness: " + run.soundness_errors.front());
}

ScenarioOutcome check_handshake(RunResult run) {
  Check check;
  check_clean(check, run);

  const std::vector<FlagSet> expected = {
      FlagSet{TcpFlag::Syn},
      FlagSet{TcpFlag::Syn, TcpFlag::Ack},
      FlagSet{TcpFlag::Ack},
  };
  check.expect(sent_flags(run) == expected,
               "segment sequence is not SYN, SYN+ACK, ACK");

  using P = std::pair<TcpState, TcpState>;
  const std::vector<P> active = {
      {TcpState::Closed, TcpState::SynSent},
      {TcpState::SynSent, TcpState::Established},
  };
  const std::vector<P> passive = {
      {TcpState::Closed, TcpState::Listen},
      {TcpState::Listen, TcpState::SynReceived},
      {TcpState::SynReceived, TcpState::Established},
  };
  check.expect(state_changes(run, 0) == active,
               "active side did not run CLOSED->SYN_SENT->ESTABLISHED");
  check.expect(state_changes(run, 1) == passive,
               "passive side did not run LISTEN->SYN_RECEIVED->ESTABLISHED");
  check.expect(final_state_is(run, 0, TcpState::Established) &&
                   !run.final_models[0].empty(),
               "active endpoint not ESTABLISHED");
  check.expect(final_state_is(run, 1, TcpState::Established) &&
                   !run.final_models[1].empty(),
               "passive endpoint not ESTABLISHED");

  return {std::move(run), check.failures.empty(), std::move(check.failures)};
}

ScenarioOutcome check_transfer(RunResult run) {
  Check check;
  check_clean(check, run);
  check.expect(final_state_is(run, 0, TcpState::Established),
               "sender not ESTABLISHED");
  check.expect(final_state_is(run, 1, TcpState::Established),
               "receiver not ESTABLISHED");

  bool delivered = false;
  for (const TraceRecord& r : run.trace) {
    if (r.kind == TraceKind::UserCall && r.ep == 1 &&
        r.detail.find("receive") == 0 &&
        r.detail.find("data=68656c6c6f") != std::string::npos) {
      delivered = true;
    }
  }
  check.expect(delivered, "payload 68656c6c6f was not delivered");
  return {std::move(run), check.failures.empty(), std::move(check.failures)};
}

ScenarioOutcome check_orderly_close(RunResult run, const RunOptions& options) {
  Check check;
  check_clean(check, run);
  check.expect(final_state_is(run, 0, TcpState::Closed),
               "active side did not end CLOSED");
  check.expect(final_state_is(run, 1, TcpState::Closed),
               "passive side did not end CLOSED");

  // The TIME_WAIT residence of the actively-closing side must be exactly
  // two maximum segment lifetimes, and its exit must be the last move.
  std::optional<VirtualTime> entered;
  std::optional<VirtualTime> left;
  for (const TraceRecord& r : run.trace) {
    if (r.kind != TraceKind::StateChange || r.ep != 0) continue;
    if (r.to == TcpState::TimeWait) entered = r.t;
    if (r.from == TcpState::TimeWait && r.to == TcpState::Closed) left = r.t;
  }
  check.expect(entered.has_value(), "active side never reached TIME_WAIT");
  check.expect(left.has_value(), "active side never left TIME_WAIT");
  if (entered && left) {
    check.expect(*left - *entered == options.timers.time_wait_duration(),
                 "TIME_WAIT lasted " + std::to_string(*left - *entered) +
                     " instead of " +
                     std::to_string(options.timers.time_wait_duration()));
  }
  return {std::move(run), check.failures.empty(), std::move(check.failures)};
}

ScenarioOutcome check_shutdown_race(const RunOptions& options) {
  // One interleaving rarely exposes a race; sweep a block of seeds. Any
  // violation in any interleaving fails the scenario, which is exactly
  // what buggy mode is meant to demonstrate.
  Check check;
  ScenarioOutcome outcome;

  const ScriptPair scripts = shutdown_race_scripts(false);
  for (std::uint64_t i = 0; i < kShutdownRaceSweep; ++i) {
    RunOptions sub = options;
    sub.seed = options.seed + i;
    RunResult run = run_pair(scripts.a, scripts.b, sub);

    check.expect(!run.aborted, "run aborted: " + run.abort_reason);
    check.expect(run.soundness_errors.empty(), "soundness errors recorded");
    for (const ViolationRecord& v : run.violations) {
      check.expect(false, "seed " + std::to_string(sub.seed) +
                              ": unauthorized transition " +
                              std::string(state_name(v.from)) + "->" +
                              std::string(state_name(v.to)));
    }
    if (run.violations.empty()) {
      check.expect(final_state_is(run, 0, TcpState::Closed),
                   "initiator did not drain to CLOSED");
      check.expect(final_state_is(run, 1, TcpState::Closed),
                   "peer did not drain to CLOSED");
    }
    if (i == 0) outcome.run = std::move(run);
  }

  outcome.passed = check.failures.empty();
  outcome.failures = std::move(check.failures);
  return outcome;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"handshake", "transfer", "orderly-close", "shutdown-race"};
}

bool is_scenario_name(const std::string& name) {
  const auto names = scenario_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ScriptPair handshake_scripts() { return parse_script_text(kHandshakeScript); }
ScriptPair transfer_scripts() { return parse_script_text(kTransferScript); }
ScriptPair orderly_close_scripts() {
  return parse_script_text(kOrderlyCloseScript);
}
ScriptPair shutdown_race_scripts(bool rst_variant) {
  return parse_script_text(rst_variant ? kShutdownRaceRstScript
                                       : kShutdownRaceFinScript);
}

ScenarioOutcome run_scenario(const std::string& name,
                             const RunOptions& options) {
  if (name == "handshake") {
    const ScriptPair scripts = handshake_scripts();
    return check_handshake(run_pair(scripts.a, scripts.b, options));
  }
  if (name == "transfer") {
    const ScriptPair scripts = transfer_scripts();
    return check_transfer(run_pair(scripts.a, scripts.b, options));
  }
  if (name == "orderly-close") {
    const ScriptPair scripts = orderly_close_scripts();
    return check_orderly_close(run_pair(scripts.a, scripts.b, options),
                               options);
  }
  if (name == "shutdown-race") {
    return check_shutdown_race(options);
  }
  ScenarioOutcome outcome;
  outcome.failures.push_back("unknown scenario: " + name);
  return outcome;
}

}  // namespace tcpconform
