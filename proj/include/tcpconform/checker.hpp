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
#include <span>
#include <string>
#include <vector>

#include "tcpconform/segment_engine.hpp"
#include "tcpconform/trace.hpp"

namespace tcpconform {

// The per-state result sets a segment handler is allowed to produce.
// CLOSED is special-cased: most states may only reach it through a RST,
// in which case the reset flag must have been raised.
struct AllowedOutcome {
  StateSet states;
  bool closed_needs_reset = true;
};

AllowedOutcome allowed_handler_outcome(TcpState state);

// One offending sweep case, kept structured so self-tests can reason
// about which part of the input grid tripped.
struct SweepViolation {
  TcpState state = TcpState::Closed;
  FlagSet flags;
  std::int32_t seq_offset = 0;
  std::int32_t ack_offset = 0;
  std::uint32_t length = 0;
  TcpState observed = TcpState::Closed;
  std::string reason;

  std::string to_string() const;
};

struct CheckReport {
  std::string name;
  std::size_t cases = 0;
  std::vector<std::string> failures;        // deterministic order
  std::vector<SweepViolation> sweep;        // handler sweep only

  bool passed() const { return failures.empty(); }
};

struct ConformanceReport {
  std::vector<CheckReport> checks;

  bool all_passed() const;
  std::string to_json() const;
  std::string to_table() const;
};

struct CheckerOptions {
  // Seeded handler defect, used by the self-tests that prove the sweep
  // catches broken handlers.
  EngineDefect defect = EngineDefect::None;
  // Run the shutdown regression against the defective shutdown path.
  bool buggy_shutdown = false;
  std::uint64_t seed = 0;
  std::size_t regression_runs = 1000;
  // Shard independent cases across OpenMP workers. Reports are
  // identical either way.
  bool parallel = false;
};

// Exhaustive handler sweep: 11 states x 32 flag sets x 3 seq classes x
// 3 ack classes x 3 payload lengths = 9,504 cases. Each case builds a
// socket, snapshots its model, runs the handler and checks the result
// state against the allowed set; CLOSE_WAIT additionally must leave the
// model untouched unless the segment carried RST.
CheckReport check_handlers(const CheckerOptions& options = {});

// Closure fixpoint: for every state, the depth-3 reachable set equals
// depth 4 and matches a breadth-first walk of the declarative table's
// segment edges (an independent route to the same answer).
CheckReport check_closure_fixpoint(const CheckerOptions& options = {});

// Call-order validation of a recorded trace against the dependency
// rules: nothing before open, no send/receive/shutdown without a prior
// successful connect or accept, nothing after close.
CheckReport check_api_ordering(std::span<const TraceRecord> trace);

// The original shutdown defect, hunted across seeded interleavings of
// the FIN and RST races. A conforming build yields zero violations;
// with buggy_shutdown the report lists every unauthorized transition.
CheckReport check_shutdown_regression(const CheckerOptions& options = {});

// Valid names: handlers, closure, api-order, shutdown. An empty list
// selects everything.
ConformanceReport run_checks(const CheckerOptions& options,
                             const std::vector<std::string>& names);
ConformanceReport run_all_checks(const CheckerOptions& options = {});

}  // namespace tcpconform
