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

#include "tcpconform/error.hpp"

#include <array>
#include <utility>

namespace tcpconform {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 6> kErrorNames = {{
    {ErrorCode::NoError, "NO_ERROR"},
    {ErrorCode::Timeout, "ERROR_TIMEOUT"},
    {ErrorCode::PortUnreachable, "ERROR_PORT_UNREACHABLE"},
    {ErrorCode::ConnectionReset, "ERROR_CONNECTION_RESET"},
    {ErrorCode::NotConnected, "ERROR_NOT_CONNECTED"},
    {ErrorCode::InvalidSocket, "ERROR_INVALID_SOCKET"},
}};

}  // namespace

std::string_view error_name(ErrorCode error) {
  for (const auto& [code, name] : kErrorNames) {
    if (code == error) return name;
  }
  return "ERROR_UNKNOWN";
}

std::optional<ErrorCode> error_from_name(std::string_view name) {
  for (const auto& [code, n] : kErrorNames) {
    if (n == name) return code;
  }
  return std::nullopt;
}

}  // namespace tcpconform
