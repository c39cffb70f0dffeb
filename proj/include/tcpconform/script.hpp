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

#include "tcpconform/socket.hpp"
#include "tcpconform/types.hpp"

namespace tcpconform {

// One user-task step. Scripts drive an endpoint's user task; each op
// acts on the endpoint's current socket (the one opened last).
enum class ScriptOpKind : std::uint8_t {
  Open,
  Connect,
  Accept,
  Send,
  Receive,
  Shutdown,
  Close,
  Sleep,
  InjectRst,  // raw RST at the current socket's peer, or at an explicit port
  InjectSyn,  // raw SYN to a given peer port, with no backing socket
};

struct ScriptOp {
  ScriptOpKind kind = ScriptOpKind::Open;
  IpAddr ip;                        // connect
  Port port = 0;                    // connect / accept / inject-syn
  std::vector<std::uint8_t> data;   // send payload
  Duration ticks = 0;               // sleep
  // Socket the op acts on; 0 targets the endpoint's current socket
  // (the one opened last). Scripts always use 0; session handles pin it.
  SockDescriptor sd = 0;
};

using Script = std::vector<ScriptOp>;

// Line-based scenario scripts, two endpoints per file:
//
//   [a]
//   open
//   connect 10.0.0.2 7777
//   send 68656c6c6f
//   shutdown
//   close
//   [b]
//   open
//   accept 7777
//   receive
//   sleep 5
//   inject-rst
//
// '#' starts a comment. Throws std::runtime_error with a line number on
// malformed input.
struct ScriptPair {
  Script a;
  Script b;
};

ScriptPair parse_script_text(const std::string& text);
ScriptPair parse_script_file(const std::string& path);

std::string script_op_name(ScriptOpKind kind);

}  // namespace tcpconform
