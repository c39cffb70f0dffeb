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

#include "tcpconform/script.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tcpconform {

namespace {

[[noreturn]] void fail(int line_no, const std::string& message) {
  throw std::runtime_error("script line " + std::to_string(line_no) + ": " +
                           message);
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) {
    if (token.front() == '#') break;
    tokens.push_back(token);
  }
  return tokens;
}

std::optional<std::vector<std::uint8_t>> parse_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    std::uint8_t byte = 0;
    auto [p, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, byte, 16);
    if (ec != std::errc{} || p != hex.data() + i + 2) return std::nullopt;
    out.push_back(byte);
  }
  return out;
}

std::optional<std::uint64_t> parse_number(const std::string& text) {
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

std::string script_op_name(ScriptOpKind kind) {
  switch (kind) {
    case ScriptOpKind::Open: return "open";
    case ScriptOpKind::Connect: return "connect";
    case ScriptOpKind::Accept: return "accept";
    case ScriptOpKind::Send: return "send";
    case ScriptOpKind::Receive: return "receive";
    case ScriptOpKind::Shutdown: return "shutdown";
    case ScriptOpKind::Close: return "close";
    case ScriptOpKind::Sleep: return "sleep";
    case ScriptOpKind::InjectRst: return "inject-rst";
    case ScriptOpKind::InjectSyn: return "inject-syn";
  }
  return "?";
}

ScriptPair parse_script_text(const std::string& text) {
  ScriptPair pair;
  Script* current = nullptr;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;

  while (std::getline(stream, line)) {
    ++line_no;
    const auto tokens = tokenize(line);
    if (tokens.empty()) continue;
    const std::string& word = tokens.front();

    if (word == "[a]") {
      current = &pair.a;
      continue;
    }
    if (word == "[b]") {
      current = &pair.b;
      continue;
    }
    if (current == nullptr) fail(line_no, "op before [a] or [b] section");

    ScriptOp op;
    if (word == "open") {
      op.kind = ScriptOpKind::Open;
    } else if (word == "connect") {
      if (tokens.size() != 3) fail(line_no, "connect <ip> <port>");
      op.kind = ScriptOpKind::Connect;
      const auto ip = IpAddr::parse(tokens[1]);
      const auto port = parse_number(tokens[2]);
      if (!ip) fail(line_no, "bad ip '" + tokens[1] + "'");
      if (!port || *port > 65535) fail(line_no, "bad port '" + tokens[2] + "'");
      op.ip = *ip;
      op.port = static_cast<Port>(*port);
    } else if (word == "accept") {
      if (tokens.size() != 2) fail(line_no, "accept <port>");
      op.kind = ScriptOpKind::Accept;
      const auto port = parse_number(tokens[1]);
      if (!port || *port > 65535) fail(line_no, "bad port '" + tokens[1] + "'");
      op.port = static_cast<Port>(*port);
    } else if (word == "send") {
      if (tokens.size() != 2) fail(line_no, "send <hex>");
      op.kind = ScriptOpKind::Send;
      const auto data = parse_hex(tokens[1]);
      if (!data) fail(line_no, "bad hex payload '" + tokens[1] + "'");
      op.data = *data;
    } else if (word == "receive") {
      op.kind = ScriptOpKind::Receive;
    } else if (word == "shutdown") {
      op.kind = ScriptOpKind::Shutdown;
    } else if (word == "close") {
      op.kind = ScriptOpKind::Close;
    } else if (word == "sleep") {
      if (tokens.size() != 2) fail(line_no, "sleep <ticks>");
      op.kind = ScriptOpKind::Sleep;
      const auto ticks = parse_number(tokens[1]);
      if (!ticks) fail(line_no, "bad tick count '" + tokens[1] + "'");
      op.ticks = *ticks;
    } else if (word == "inject-rst") {
      op.kind = ScriptOpKind::InjectRst;
      if (tokens.size() == 2) {
        const auto port = parse_number(tokens[1]);
        if (!port || *port > 65535) {
          fail(line_no, "bad port '" + tokens[1] + "'");
        }
        op.port = static_cast<Port>(*port);
      } else if (tokens.size() != 1) {
        fail(line_no, "inject-rst [<port>]");
      }
    } else if (word == "inject-syn") {
      if (tokens.size() != 2) fail(line_no, "inject-syn <port>");
      op.kind = ScriptOpKind::InjectSyn;
      const auto port = parse_number(tokens[1]);
      if (!port || *port > 65535) fail(line_no, "bad port '" + tokens[1] + "'");
      op.port = static_cast<Port>(*port);
    } else {
      fail(line_no, "unknown op '" + word + "'");
    }
    current->push_back(std::move(op));
  }
  return pair;
}

ScriptPair parse_script_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open script file: " + path);
  std::ostringstream text;
  text << file.rdbuf();
  return parse_script_text(text.str());
}

}  // namespace tcpconform
