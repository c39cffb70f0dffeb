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

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcpconform/checker.hpp"
#include "tcpconform/scenario.hpp"
#include "tcpconform/trace.hpp"

namespace {

using namespace tcpconform;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // conformance or scenario expectation failed
constexpr int kExitUsage = 2;     // bad flags, unknown scenario, bad script

bool write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return true;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    std::cerr << "cannot write " << path << "\n";
    return false;
  }
  file << content;
  return true;
}

int cmd_scenario(const std::string& name, const RunOptions& run_options,
                 const std::string& out, const std::string& format) {
  ScenarioOutcome outcome;
  if (is_scenario_name(name)) {
    outcome = run_scenario(name, run_options);
  } else if (std::filesystem::exists(name)) {
    ScriptPair scripts;
    try {
      scripts = parse_script_file(name);
    } catch (const std::exception& e) {
      std::cerr << e.what() << "\n";
      return kExitUsage;
    }
    outcome.run = run_pair(scripts.a, scripts.b, run_options);
    outcome.passed = outcome.run.violations.empty() &&
                     outcome.run.soundness_errors.empty() &&
                     !outcome.run.aborted;
    if (outcome.run.aborted) {
      outcome.failures.push_back(outcome.run.abort_reason);
    }
  } else {
    std::cerr << "unknown scenario or script file: " << name << "\n";
    return kExitUsage;
  }

  const std::string rendered = format == "table"
                                   ? to_table(outcome.run.trace)
                                   : to_jsonl(outcome.run.trace);
  if (!write_output(out, rendered)) return kExitUsage;

  for (const ViolationRecord& v : outcome.run.violations) {
    std::cerr << "transition violation: " << state_name(v.from) << " -> "
              << state_name(v.to) << " (endpoint "
              << (v.ep == 0 ? 'a' : 'b') << ", " << v.where << ")\n";
  }
  for (const std::string& failure : outcome.failures) {
    std::cerr << "expectation failed: " << failure << "\n";
  }
  if (outcome.passed) {
    std::cerr << "scenario " << name << ": ok\n";
    return kExitOk;
  }
  return kExitFailure;
}

int cmd_conformance(const CheckerOptions& options,
                    const std::vector<std::string>& checks,
                    const std::string& out, const std::string& format) {
  const ConformanceReport report = run_checks(options, checks);
  const std::string rendered =
      format == "json" ? report.to_json() : report.to_table();
  if (!write_output(out, rendered)) return kExitUsage;
  return report.all_passed() ? kExitOk : kExitFailure;
}

int cmd_dump_automaton(const std::string& out, const std::string& format) {
  std::string rendered;
  if (format == "jsonl") {
    for (const TransitionEntry& entry : transition_table().entries()) {
      nlohmann::ordered_json line;
      line["from"] = state_name(entry.from);
      line["trigger"] = entry.trigger_name();
      line["to"] = state_name(entry.to);
      rendered += line.dump() + "\n";
    }
  } else {
    for (const std::string& line : transition_table().canonical_listing()) {
      rendered += line + "\n";
    }
  }
  return write_output(out, rendered) ? kExitOk : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TCP connection-automaton conformance workbench"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out;
  bool buggy = false;

  // scenario ----------------------------------------------------------
  auto* scenario = app.add_subcommand(
      "scenario", "Run a named scenario or a script file and emit its trace");
  std::string scenario_name;
  std::string scenario_format = "jsonl";
  RunOptions run_options;
  scenario->add_option("name", scenario_name,
                       "handshake | transfer | orderly-close | shutdown-race "
                       "| path to a script file")
      ->required();
  scenario->add_option("--seed", seed, "scheduler seed")
      ->envname("TCPCONFORM_SEED");
  scenario->add_flag("--buggy", buggy,
                     "skip the post-flush state re-check in shutdown");
  scenario->add_option("--msl", run_options.timers.msl,
                       "maximum segment lifetime, virtual ticks");
  scenario->add_option("--timeout", run_options.socket_timeout,
                       "socket timeout, virtual ticks");
  scenario->add_option("--out", out, "trace output path (default stdout)");
  scenario->add_option("--format", scenario_format, "jsonl | table")
      ->check(CLI::IsMember({"jsonl", "table"}));

  // conformance -------------------------------------------------------
  auto* conformance = app.add_subcommand(
      "conformance", "Run the conformance checks and emit a report");
  std::vector<std::string> checks;
  std::string report_format = "table";
  CheckerOptions checker_options;
  conformance->add_option("--check", checks,
                          "run only the named checks: handlers | closure | "
                          "api-order | shutdown")
      ->check(CLI::IsMember({"handlers", "closure", "api-order", "shutdown"}));
  conformance->add_option("--seed", seed, "base seed for seeded checks")
      ->envname("TCPCONFORM_SEED");
  conformance->add_flag("--buggy", buggy,
                        "run against the defective shutdown path");
  conformance->add_option("--runs", checker_options.regression_runs,
                          "interleavings for the shutdown regression");
  conformance->add_flag("--parallel", checker_options.parallel,
                        "shard independent cases across OpenMP workers");
  conformance->add_option("--out", out, "report output path (default stdout)");
  conformance->add_option("--format", report_format, "table | json")
      ->check(CLI::IsMember({"table", "json"}));

  // dump-automaton ----------------------------------------------------
  auto* dump = app.add_subcommand(
      "dump-automaton", "Print the canonical transition listing");
  std::string dump_format = "table";
  dump->add_option("--out", out, "listing output path (default stdout)");
  dump->add_option("--format", dump_format, "table | jsonl")
      ->check(CLI::IsMember({"table", "jsonl"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (scenario->parsed()) {
    run_options.seed = seed;
    run_options.buggy_shutdown = buggy;
    return cmd_scenario(scenario_name, run_options, out, scenario_format);
  }
  if (conformance->parsed()) {
    checker_options.seed = seed;
    checker_options.buggy_shutdown = buggy;
    return cmd_conformance(checker_options, checks, out, report_format);
  }
  if (dump->parsed()) {
    return cmd_dump_automaton(out, dump_format);
  }
  return kExitUsage;
}
