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

// End-to-end exit-code contract of the command line tool:
// 0 success, 1 conformance/scenario failure, 2 usage or config error.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#ifndef TCPCONFORM_CLI_PATH
#error "TCPCONFORM_CLI_PATH must point at the built binary"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string command = std::string(TCPCONFORM_CLI_PATH) + " " + args +
                              " >/dev/null 2>/dev/null";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  std::ostringstream out;
  out << file.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("exit 0: healthy scenarios and checks") {
  CHECK(run_cli("scenario handshake --out /tmp/tcpconform_cli_hs.jsonl") == 0);
  CHECK(run_cli("scenario transfer --out /dev/null") == 0);
  CHECK(run_cli("scenario orderly-close --out /dev/null --format table") == 0);
  CHECK(run_cli("conformance --check closure") == 0);
  CHECK(run_cli("conformance --check handlers --check api-order") == 0);
  CHECK(run_cli("dump-automaton") == 0);
  CHECK(run_cli("dump-automaton --format jsonl") == 0);
}

TEST_CASE("exit 1: the defective shutdown is flagged") {
  CHECK(run_cli("scenario shutdown-race --buggy --out /dev/null") == 1);
  CHECK(run_cli("conformance --check shutdown --buggy --runs 40") == 1);
  CHECK(run_cli("scenario shutdown-race --out /dev/null") == 0);
  CHECK(run_cli("conformance --check shutdown --runs 40") == 0);
}

TEST_CASE("exit 2: usage and config errors") {
  CHECK(run_cli("scenario no-such-scenario") == 2);
  CHECK(run_cli("scenario handshake --format yaml") == 2);
  CHECK(run_cli("conformance --check bogus") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("") == 2);  // a subcommand is required
}

TEST_CASE("exit 2: malformed script file") {
  const std::string path = "/tmp/tcpconform_cli_bad.script";
  std::ofstream(path) << "[a]\nopen\nsend not-hex\n";
  CHECK(run_cli("scenario " + path) == 2);
}

TEST_CASE("script files drive both endpoints") {
  const std::string path = "/tmp/tcpconform_cli_ok.script";
  std::ofstream(path) << "[a]\nopen\nconnect 10.0.0.2 9000\nsend 616263\n"
                         "[b]\nopen\naccept 9000\nreceive\n";
  CHECK(run_cli("scenario " + path + " --out /dev/null") == 0);
}

TEST_CASE("equal seeds produce byte-identical trace files end to end") {
  const std::string first = "/tmp/tcpconform_cli_d1.jsonl";
  const std::string second = "/tmp/tcpconform_cli_d2.jsonl";
  REQUIRE(run_cli("scenario transfer --seed 21 --out " + first) == 0);
  REQUIRE(run_cli("scenario transfer --seed 21 --out " + second) == 0);
  const std::string a = slurp(first);
  CHECK(!a.empty());
  CHECK(a == slurp(second));
}
