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

#include "tcpconform/types.hpp"

namespace tcpconform {

namespace {

constexpr std::array<std::string_view, kStateCount> kStateNames = {
    "CLOSED",      "LISTEN",     "SYN_SENT",   "SYN_RECEIVED",
    "ESTABLISHED", "FIN_WAIT_1", "FIN_WAIT_2", "CLOSE_WAIT",
    "CLOSING",     "LAST_ACK",   "TIME_WAIT",
};

struct FlagName {
  TcpFlag flag;
  std::string_view name;
};

// Bit order, low to high.
constexpr std::array<FlagName, 5> kFlagNames = {{
    {TcpFlag::Fin, "FIN"},
    {TcpFlag::Syn, "SYN"},
    {TcpFlag::Rst, "RST"},
    {TcpFlag::Psh, "PSH"},
    {TcpFlag::Ack, "ACK"},
}};

}  // namespace

std::string_view state_name(TcpState state) {
  if (!is_valid_state(state)) return "INVALID";
  return kStateNames[static_cast<std::size_t>(state)];
}

std::optional<TcpState> state_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStateCount; ++i) {
    if (kStateNames[i] == name) return static_cast<TcpState>(i);
  }
  return std::nullopt;
}

std::string flags_name(FlagSet flags) {
  if (flags.empty()) return "none";
  std::string out;
  for (const auto& [flag, name] : kFlagNames) {
    if (!flags.has(flag)) continue;
    if (!out.empty()) out += '+';
    out += name;
  }
  return out;
}

std::optional<FlagSet> flags_from_name(std::string_view name) {
  if (name == "none") return FlagSet{};
  FlagSet out;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    std::size_t next = name.find('+', pos);
    std::string_view token = name.substr(
        pos, next == std::string_view::npos ? std::string_view::npos
                                            : next - pos);
    bool found = false;
    for (const auto& [flag, flag_name] : kFlagNames) {
      if (flag_name == token) {
        out = out.with(flag);
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace tcpconform
