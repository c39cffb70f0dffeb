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

#include <string>
#include <vector>

#include "tcpconform/harness.hpp"
#include "tcpconform/script.hpp"

namespace tcpconform {

// Canned two-endpoint scenarios. Each has an expectation table checked
// against the run: segment order, state sequences, final states,
// violation count.
//
//   handshake      active/passive open meeting in ESTABLISHED
//   transfer       handshake plus one data exchange
//   orderly-close  full close: FIN both ways, TIME_WAIT drains via 2*MSL
//   shutdown-race  shutdown racing the peer's FIN; in buggy mode this
//                  reproduces the unauthorized CLOSE_WAIT -> FIN_WAIT_1
//                  transition and the run is expected to be flagged
std::vector<std::string> scenario_names();
bool is_scenario_name(const std::string& name);

ScriptPair handshake_scripts();
ScriptPair transfer_scripts();
ScriptPair orderly_close_scripts();
// The shutdown race of the original defect report; `rst_variant` swaps
// the peer's FIN for an injected RST.
ScriptPair shutdown_race_scripts(bool rst_variant);

struct ScenarioOutcome {
  // Trace of the run with the base seed (scenarios that sweep several
  // interleavings keep the first run's trace for output).
  RunResult run;
  bool passed = false;
  std::vector<std::string> failures;
};

// Number of seeded interleavings shutdown-race explores per invocation.
inline constexpr std::uint64_t kShutdownRaceSweep = 16;

ScenarioOutcome run_scenario(const std::string& name,
                             const RunOptions& options);

}  // namespace tcpconform
