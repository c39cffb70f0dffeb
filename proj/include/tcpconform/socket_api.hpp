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
#include <span>
#include <variant>
#include <vector>

#include "tcpconform/error.hpp"
#include "tcpconform/harness.hpp"

namespace tcpconform {

// Session-typed socket handles. The phase of the protocol is encoded in
// the handle's type, so the call order the protocol demands is enforced
// by the compiler:
//
//   socket_open        -> UnconnectedSession
//   socket_connect     -> ConnectedSession | (UnconnectedSession, error)
//   socket_listen_accept likewise for the passive side
//   send/receive       require a ConnectedSession; unreachable without a
//                       successful connect
//   socket_shutdown    consumes the ConnectedSession; a ShutdownSession
//                       can only be closed, so repeated shutdown is
//                       unrepresentable
//   socket_close       consumes any session
//
// Handles are move-only. A handle dropped without an explicit close
// closes the socket on destruction.

struct ApiAccess;

namespace detail {

class SessionBase {
 public:
  SessionBase(Simulator* sim, int ep, SockDescriptor sd)
      : sim_(sim), ep_(ep), sd_(sd) {}
  SessionBase(SessionBase&& other) noexcept
      : sim_(other.sim_), ep_(other.ep_), sd_(other.sd_) {
    other.sim_ = nullptr;
  }
  SessionBase& operator=(SessionBase&& other) noexcept {
    sim_ = other.sim_;
    ep_ = other.ep_;
    sd_ = other.sd_;
    other.sim_ = nullptr;
    return *this;
  }
  SessionBase(const SessionBase&) = delete;
  SessionBase& operator=(const SessionBase&) = delete;

  bool live() const { return sim_ != nullptr; }
  SockDescriptor descriptor() const { return sd_; }
  int endpoint() const { return ep_; }

 protected:
  ~SessionBase() = default;

 private:
  friend struct tcpconform::ApiAccess;

  Simulator* sim_ = nullptr;
  int ep_ = 0;
  SockDescriptor sd_ = 0;
};

}  // namespace detail

class UnconnectedSession final : public detail::SessionBase {
 public:
  UnconnectedSession(UnconnectedSession&&) noexcept = default;
  UnconnectedSession& operator=(UnconnectedSession&&) noexcept = default;
  ~UnconnectedSession();

 private:
  using SessionBase::SessionBase;
  friend struct ApiAccess;
};

class ConnectedSession final : public detail::SessionBase {
 public:
  ConnectedSession(ConnectedSession&&) noexcept = default;
  ConnectedSession& operator=(ConnectedSession&&) noexcept = default;
  ~ConnectedSession();

 private:
  using SessionBase::SessionBase;
  friend struct ApiAccess;
};

// Left over after socket_shutdown; close is the only remaining move.
class ShutdownSession final : public detail::SessionBase {
 public:
  ShutdownSession(ShutdownSession&&) noexcept = default;
  ShutdownSession& operator=(ShutdownSession&&) noexcept = default;
  ~ShutdownSession();

 private:
  using SessionBase::SessionBase;
  friend struct ApiAccess;
};

struct [[nodiscard]] OpenOutcome {
  ErrorCode error = ErrorCode::NoError;
  std::optional<UnconnectedSession> session;  // set iff NO_ERROR
};

struct [[nodiscard]] ConnectFailure {
  UnconnectedSession session;  // handed back so the caller can close it
  ErrorCode error;
};

// A ConnectedSession exists only when connect succeeded; every other
// outcome forces the caller through the error branch.
using ConnectOutcome = std::variant<ConnectedSession, ConnectFailure>;

struct [[nodiscard]] SendOutcome {
  ErrorCode error = ErrorCode::NoError;
  std::size_t written = 0;
};

struct [[nodiscard]] ReceiveOutcome {
  ErrorCode error = ErrorCode::NoError;
  // Empty data with NO_ERROR signals end of stream (peer sent FIN).
  std::vector<std::uint8_t> data;
};

enum class ShutdownHow : std::uint8_t { Full };

struct [[nodiscard]] ShutdownOutcome {
  ErrorCode error = ErrorCode::NoError;
  ShutdownSession session;
};

OpenOutcome socket_open(Simulator& sim, int ep, SockType type,
                        SockProtocol protocol);

ConnectOutcome socket_connect(UnconnectedSession&& session, IpAddr remote_ip,
                              Port remote_port);

ConnectOutcome socket_listen_accept(UnconnectedSession&& session,
                                    Port local_port);

SendOutcome socket_send(ConnectedSession& session,
                        std::span<const std::uint8_t> data, FlagSet flags = {});

ReceiveOutcome socket_receive(ConnectedSession& session, FlagSet flags = {});

ShutdownOutcome socket_shutdown(ConnectedSession&& session,
                                ShutdownHow how = ShutdownHow::Full);

void socket_close(UnconnectedSession&& session);
void socket_close(ConnectedSession&& session);
void socket_close(ShutdownSession&& session);

}  // namespace tcpconform
