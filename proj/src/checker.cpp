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

#include "tcpconform/checker.hpp"

#include <array>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tcpconform/automaton.hpp"
#include "tcpconform/scenario.hpp"

namespace tcpconform {

namespace {

constexpr std::array<std::int32_t, 3> kSeqOffsets = {-1, 0, 1};
constexpr std::array<std::int32_t, 3> kAckOffsets = {-1, 0, 1};
constexpr std::array<std::uint32_t, 3> kLengths = {0, 1, 1460};
constexpr std::size_t kFlagValues = 32;
constexpr std::size_t kCasesPerState =
    kFlagValues * kSeqOffsets.size() * kAckOffsets.size() * kLengths.size();
constexpr std::size_t kSweepCases = kStateCount * kCasesPerState;

struct SweepCase {
  TcpState state;
  FlagSet flags;
  std::int32_t seq_offset;
  std::int32_t ack_offset;
  std::uint32_t length;
};

SweepCase case_at(std::size_t index) {
  SweepCase c{};
  c.length = kLengths[index % kLengths.size()];
  index /= kLengths.size();
  c.ack_offset = kAckOffsets[index % kAckOffsets.size()];
  index /= kAckOffsets.size();
  c.seq_offset = kSeqOffsets[index % kSeqOffsets.size()];
  index /= kSeqOffsets.size();
  c.flags = FlagSet(static_cast<std::uint8_t>(index % kFlagValues));
  index /= kFlagValues;
  c.state = static_cast<TcpState>(index);
  return c;
}

// Runs a single sweep case and reports its violations, if any.
std::vector<SweepViolation> run_sweep_case(const SweepCase& c,
                                           EngineDefect defect) {
  std::vector<SweepViolation> out;
  auto violation = [&](TcpState observed, std::string reason) {
    SweepViolation v;
    v.state = c.state;
    v.flags = c.flags;
    v.seq_offset = c.seq_offset;
    v.ack_offset = c.ack_offset;
    v.length = c.length;
    v.observed = observed;
    v.reason = std::move(reason);
    out.push_back(std::move(v));
  };

  Socket socket = make_sweep_socket(c.state);
  const SocketModel before = to_model(socket);

  Segment segment = make_segment(socket.remote_port, socket.local_port,
                                 socket.rcv_nxt + c.seq_offset,
                                 socket.snd_nxt + c.ack_offset, c.flags);
  segment.length = c.length;

  try {
    handle_in_state(socket, segment, defect);
  } catch (const TransitionViolation& fault) {
    violation(fault.to(), "guarded state change refused " +
                              std::string(state_name(fault.from())) + "->" +
                              std::string(state_name(fault.to())));
    return out;
  }

  const AllowedOutcome allowed = allowed_handler_outcome(c.state);
  if (!allowed.states.contains(socket.state)) {
    violation(socket.state, "result state outside the allowed set " +
                                allowed.states.to_string());
  } else if (socket.state == TcpState::Closed && c.state != TcpState::Closed) {
    if (allowed.closed_needs_reset && !socket.reset_flag) {
      violation(socket.state, "reached CLOSED without raising the reset flag");
    }
  }
  if (socket.reset_flag && !c.flags.has(TcpFlag::Rst)) {
    violation(socket.state, "reset flag raised by a segment without RST");
  }

  // The CLOSE_WAIT handler must not touch the model: the only sanctioned
  // change is RST tearing the connection down.
  if (c.state == TcpState::CloseWait) {
    const SocketModel after = to_model(socket);
    if (c.flags.has(TcpFlag::Rst)) {
      SocketModel expected = before;
      expected.state = TcpState::Closed;
      expected.reset_flag = true;
      if (after != expected) {
        violation(socket.state,
                  "RST teardown altered more than state and reset flag");
      }
    } else if (after != before) {
      violation(socket.state, "model mutated without RST: " +
                                  model_to_string(after));
    }
  }
  return out;
}

// Independent closure route for the fixpoint check: breadth-first over
// the declarative table's segment edges, never through the handlers.
StateSet table_closure(TcpState start, int depth) {
  StateSet closure{start};
  StateSet frontier{start};
  for (int i = 0; i < depth; ++i) {
    StateSet next;
    for (TcpState s : frontier.to_vector()) {
      next.insert(s);
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

// One parsed socket-API call out of a UserCall trace record.
struct ApiCall {
  std::string op;
  SockDescriptor sd = 0;
  bool ok = false;
};

std::optional<ApiCall> parse_user_call(const TraceRecord& record) {
  if (record.kind != TraceKind::UserCall) return std::nullopt;
  std::istringstream stream(record.detail);
  std::string op, sd_token, error_token;
  if (!(stream >> op >> sd_token >> error_token)) return std::nullopt;
  if (sd_token.rfind("sd=", 0) != 0) return std::nullopt;
  ApiCall call;
  call.op = op;
  call.sd = static_cast<SockDescriptor>(
      std::strtoul(sd_token.c_str() + 3, nullptr, 10));
  call.ok = error_token == "NO_ERROR";
  return call;
}

}  // namespace

AllowedOutcome allowed_handler_outcome(TcpState state) {
  using S = TcpState;
  switch (state) {
    case S::Closed:
      return {{S::Closed}, false};
    case S::Listen:
      return {{S::Listen, S::SynReceived}, true};
    case S::SynSent:
      return {{S::SynSent, S::SynReceived, S::Established, S::Closed}, true};
    case S::SynReceived:
      return {{S::SynReceived, S::Established, S::Closed}, true};
    case S::Established:
      return {{S::Established, S::CloseWait, S::Closed}, true};
    case S::FinWait1:
      return {{S::FinWait1, S::FinWait2, S::Closing, S::TimeWait, S::Closed},
              true};
    case S::FinWait2:
      return {{S::FinWait2, S::TimeWait, S::Closed}, true};
    case S::CloseWait:
      return {{S::CloseWait, S::Closed}, true};
    case S::Closing:
      return {{S::Closing, S::TimeWait, S::Closed}, true};
    case S::LastAck:
      // Reached CLOSED by a plain ACK of our FIN; no reset implied.
      return {{S::LastAck, S::Closed}, false};
    case S::TimeWait:
      return {{S::TimeWait, S::Closed}, true};
  }
  return {{}, true};
}

std::string SweepViolation::to_string() const {
  std::string out = "state=" + std::string(state_name(state)) +
                    " flags=" + flags_name(flags) +
                    " seq=" + (seq_offset >= 0 ? "+" : "") +
                    std::to_string(seq_offset) +
                    " ack=" + (ack_offset >= 0 ? "+" : "") +
                    std::to_string(ack_offset) +
                    " len=" + std::to_string(length) + ": " + reason;
  if (reason.find("outside") != std::string::npos) {
    out += " (observed " + std::string(state_name(observed)) + ")";
  }
  return out;
}

CheckReport check_handlers(const CheckerOptions& options) {
  CheckReport report;
  report.name = "handlers";
  report.cases = kSweepCases;

  std::vector<std::vector<SweepViolation>> results(kSweepCases);
#ifdef TCPCONFORM_HAVE_OPENMP
  if (options.parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(kSweepCases); ++i) {
      results[static_cast<std::size_t>(i)] =
          run_sweep_case(case_at(static_cast<std::size_t>(i)), options.defect);
    }
  } else {
    for (std::size_t i = 0; i < kSweepCases; ++i) {
      results[i] = run_sweep_case(case_at(i), options.defect);
    }
  }
#else
  for (std::size_t i = 0; i < kSweepCases; ++i) {
    results[i] = run_sweep_case(case_at(i), options.defect);
  }
#endif

  for (const auto& case_violations : results) {
    for (const SweepViolation& v : case_violations) {
      report.sweep.push_back(v);
      report.failures.push_back(v.to_string());
    }
  }
  return report;
}

CheckReport check_closure_fixpoint(const CheckerOptions& options) {
  CheckReport report;
  report.name = "closure";
  report.cases = kStateCount;
  for (TcpState s : kAllStates) {
    const StateSet depth3 = reachable_states_depth(s, 3, options.defect);
    const StateSet depth4 = reachable_states_depth(s, 4, options.defect);
    const StateSet oracle = table_closure(s, 3);
    if (depth3 != depth4) {
      report.failures.push_back(std::string(state_name(s)) +
                                ": depth-3 closure " + depth3.to_string() +
                                " is not a fixpoint, depth 4 gives " +
                                depth4.to_string());
    }
    if (depth3 != oracle) {
      report.failures.push_back(std::string(state_name(s)) +
                                ": engine closure " + depth3.to_string() +
                                " differs from the table walk " +
                                oracle.to_string());
    }
    if (!depth3.contains(s)) {
      report.failures.push_back(std::string(state_name(s)) +
                                ": closure lost its own start state");
    }
  }
  return report;
}

CheckReport check_api_ordering(std::span<const TraceRecord> trace) {
  CheckReport report;
  report.name = "api-order";

  struct SocketHistory {
    bool opened = false;
    bool connected = false;
    bool closed = false;
  };
  std::map<SockDescriptor, SocketHistory> sockets;

  auto flag = [&report](SockDescriptor sd, const std::string& message) {
    report.failures.push_back("sd=" + std::to_string(sd) + ": " + message);
  };

  for (const TraceRecord& record : trace) {
    const auto call = parse_user_call(record);
    if (!call) continue;
    const auto& op = call->op;
    if (op == "inject-rst" || op == "inject-syn" || op == "sleep" ||
        op == "wait") {
      continue;
    }
    ++report.cases;

    if (op == "open") {
      if (call->ok) sockets[call->sd] = SocketHistory{true, false, false};
      continue;
    }

    SocketHistory& h = sockets[call->sd];
    if (!h.opened) {
      flag(call->sd, op + " before open (dependency open ≼ " + op + ")");
      continue;
    }
    if (h.closed) {
      flag(call->sd, op + " after close (socket already freed)");
      continue;
    }

    if (op == "connect" || op == "accept") {
      if (call->ok) h.connected = true;
    } else if (op == "send" || op == "receive" || op == "shutdown") {
      if (!h.connected) {
        flag(call->sd,
             op + " without a prior successful connect (dependency connect "
                  "≼ " + op + ")");
      }
    } else if (op == "close") {
      h.closed = true;
    }
  }
  return report;
}

CheckReport check_shutdown_regression(const CheckerOptions& options) {
  CheckReport report;
  report.name = "shutdown-regression";
  report.cases = options.regression_runs;

  const ScriptPair fin_race = shutdown_race_scripts(false);
  const ScriptPair rst_race = shutdown_race_scripts(true);

  std::vector<std::vector<std::string>> results(options.regression_runs);
  auto run_one = [&](std::size_t i) {
    RunOptions run_options;
    run_options.seed = options.seed + i;
    run_options.buggy_shutdown = options.buggy_shutdown;
    const ScriptPair& scripts = (i % 2 == 0) ? fin_race : rst_race;
    const RunResult run = run_pair(scripts.a, scripts.b, run_options);
    std::vector<std::string> found;
    for (const ViolationRecord& v : run.violations) {
      found.push_back("seed " + std::to_string(run_options.seed) + " (" +
                      ((i % 2 == 0) ? "fin" : "rst") + " race): " +
                      std::string(state_name(v.from)) + "->" +
                      std::string(state_name(v.to)) + " in " + v.where);
    }
    if (run.aborted) {
      found.push_back("seed " + std::to_string(run_options.seed) +
                      ": run aborted: " + run.abort_reason);
    }
    for (const std::string& s : run.soundness_errors) {
      found.push_back("seed " + std::to_string(run_options.seed) +
                      ": soundness: " + s);
    }
    return found;
  };

#ifdef TCPCONFORM_HAVE_OPENMP
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(options.regression_runs);
         ++i) {
      results[static_cast<std::size_t>(i)] =
          run_one(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < options.regression_runs; ++i) {
      results[i] = run_one(i);
    }
  }
#else
  for (std::size_t i = 0; i < options.regression_runs; ++i) {
    results[i] = run_one(i);
  }
#endif

  for (const auto& found : results) {
    report.failures.insert(report.failures.end(), found.begin(), found.end());
  }
  return report;
}

bool ConformanceReport::all_passed() const {
  for (const CheckReport& check : checks) {
    if (!check.passed()) return false;
  }
  return true;
}

std::string ConformanceReport::to_json() const {
  nlohmann::ordered_json out;
  out["passed"] = all_passed();
  out["checks"] = nlohmann::ordered_json::array();
  for (const CheckReport& check : checks) {
    nlohmann::ordered_json c;
    c["name"] = check.name;
    c["cases"] = check.cases;
    c["violations"] = check.failures;
    c["passed"] = check.passed();
    out["checks"].push_back(std::move(c));
  }
  return out.dump(2) + "\n";
}

std::string ConformanceReport::to_table() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-22s %10s %12s  %s\n", "check", "cases",
                "violations", "result");
  out += line;
  for (const CheckReport& check : checks) {
    std::snprintf(line, sizeof(line), "%-22s %10zu %12zu  %s\n",
                  check.name.c_str(), check.cases, check.failures.size(),
                  check.passed() ? "pass" : "FAIL");
    out += line;
  }
  for (const CheckReport& check : checks) {
    for (const std::string& failure : check.failures) {
      out += "  [" + check.name + "] " + failure + "\n";
    }
  }
  return out;
}

ConformanceReport run_checks(const CheckerOptions& options,
                             const std::vector<std::string>& names) {
  auto selected = [&names](std::string_view name) {
    if (names.empty()) return true;
    for (const std::string& n : names) {
      if (n == name) return true;
    }
    return false;
  };

  ConformanceReport report;
  if (selected("handlers")) report.checks.push_back(check_handlers(options));
  if (selected("closure")) {
    report.checks.push_back(check_closure_fixpoint(options));
  }

  if (selected("api-order")) {
    // Validate the call ordering of every scenario the harness can
    // produce, under the same defect configuration.
    CheckReport ordering;
    ordering.name = "api-order";
    for (const std::string& name : scenario_names()) {
      RunOptions run_options;
      run_options.seed = options.seed;
      run_options.buggy_shutdown = options.buggy_shutdown;
      const ScenarioOutcome outcome = run_scenario(name, run_options);
      CheckReport one = check_api_ordering(outcome.run.trace);
      ordering.cases += one.cases;
      for (std::string& failure : one.failures) {
        ordering.failures.push_back(name + ": " + failure);
      }
    }
    report.checks.push_back(std::move(ordering));
  }

  if (selected("shutdown")) {
    report.checks.push_back(check_shutdown_regression(options));
  }
  return report;
}

ConformanceReport run_all_checks(const CheckerOptions& options) {
  return run_checks(options, {});
}

}  // namespace tcpconform
