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

#include "tcpconform/socket_api.hpp"

namespace tcpconform {

// Single gateway to the private session internals; keeps the handle
// types closed to everything but the API functions below.
struct ApiAccess {
  static OpResult run(detail::SessionBase& session, ScriptOp op) {
    op.sd = session.sd_;
    return session.sim_->run_op(session.ep_, op);
  }

  static void release(detail::SessionBase& session) {
    session.sim_ = nullptr;
  }

  static void close_if_live(detail::SessionBase& session) {
    if (!session.live()) return;
    ScriptOp op;
    op.kind = ScriptOpKind::Close;
    op.sd = session.sd_;
    (void)session.sim_->run_op(session.ep_, op);
    session.sim_ = nullptr;
  }

  static UnconnectedSession unconnected(Simulator& sim, int ep,
                                        SockDescriptor sd) {
    return UnconnectedSession(&sim, ep, sd);
  }

  // Rewraps a session into the next protocol phase, consuming it.
  template <class To, class From>
  static To rewrap(From&& from) {
    detail::SessionBase& base = from;
    To to(base.sim_, base.ep_, base.sd_);
    base.sim_ = nullptr;
    return to;
  }
};

UnconnectedSession::~UnconnectedSession() { ApiAccess::close_if_live(*this); }
ConnectedSession::~ConnectedSession() { ApiAccess::close_if_live(*this); }
ShutdownSession::~ShutdownSession() { ApiAccess::close_if_live(*this); }

OpenOutcome socket_open(Simulator& sim, int ep, SockType type,
                        SockProtocol protocol) {
  OpenOutcome outcome;
  // Only the stream/TCP combination is modeled.
  if (type != SockType::Stream || protocol != SockProtocol::Tcp) {
    outcome.error = ErrorCode::InvalidSocket;
    return outcome;
  }
  ScriptOp op;
  op.kind = ScriptOpKind::Open;
  const OpResult result = sim.run_op(ep, op);
  outcome.error = result.error;
  if (result.error == ErrorCode::NoError) {
    outcome.session = ApiAccess::unconnected(sim, ep, result.sd);
  }
  return outcome;
}

ConnectOutcome socket_connect(UnconnectedSession&& session, IpAddr remote_ip,
                              Port remote_port) {
  ScriptOp op;
  op.kind = ScriptOpKind::Connect;
  op.ip = remote_ip;
  op.port = remote_port;
  const OpResult result = ApiAccess::run(session, op);
  if (result.error == ErrorCode::NoError) {
    return ApiAccess::rewrap<ConnectedSession>(std::move(session));
  }
  return ConnectFailure{std::move(session), result.error};
}

ConnectOutcome socket_listen_accept(UnconnectedSession&& session,
                                    Port local_port) {
  ScriptOp op;
  op.kind = ScriptOpKind::Accept;
  op.port = local_port;
  const OpResult result = ApiAccess::run(session, op);
  if (result.error == ErrorCode::NoError) {
    return ApiAccess::rewrap<ConnectedSession>(std::move(session));
  }
  return ConnectFailure{std::move(session), result.error};
}

SendOutcome socket_send(ConnectedSession& session,
                        std::span<const std::uint8_t> data, FlagSet) {
  if (!session.live()) return {ErrorCode::InvalidSocket, 0};
  ScriptOp op;
  op.kind = ScriptOpKind::Send;
  op.data.assign(data.begin(), data.end());
  const OpResult result = ApiAccess::run(session, op);
  return {result.error, result.written};
}

ReceiveOutcome socket_receive(ConnectedSession& session, FlagSet) {
  if (!session.live()) return {ErrorCode::InvalidSocket, {}};
  ScriptOp op;
  op.kind = ScriptOpKind::Receive;
  OpResult result = ApiAccess::run(session, op);
  return {result.error, std::move(result.data)};
}

ShutdownOutcome socket_shutdown(ConnectedSession&& session, ShutdownHow) {
  ScriptOp op;
  op.kind = ScriptOpKind::Shutdown;
  const OpResult result = ApiAccess::run(session, op);
  return {result.error, ApiAccess::rewrap<ShutdownSession>(std::move(session))};
}

void socket_close(UnconnectedSession&& session) {
  ApiAccess::close_if_live(session);
}
void socket_close(ConnectedSession&& session) {
  ApiAccess::close_if_live(session);
}
void socket_close(ShutdownSession&& session) {
  ApiAccess::close_if_live(session);
}

}  // namespace tcpconform
