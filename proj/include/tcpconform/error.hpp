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
#include <optional>
#include <string_view>

namespace tcpconform {

// Return codes of the socket API. Results carrying one of these are
// [[nodiscard]] throughout: neglecting to check them is precisely the
// usage bug the API exists to rule out.
enum class ErrorCode : std::uint8_t {
  NoError = 0,
  Timeout,
  PortUnreachable,
  ConnectionReset,
  NotConnected,
  InvalidSocket,
};

std::string_view error_name(ErrorCode error);
std::optional<ErrorCode> error_from_name(std::string_view name);

}  // namespace tcpconform
