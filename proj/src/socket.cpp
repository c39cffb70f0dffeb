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

#include "tcpconform/socket.hpp"

#include <charconv>
#include <cstdio>

namespace tcpconform {

std::string IpAddr::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (v4_ >> 24) & 0xff,
                (v4_ >> 16) & 0xff, (v4_ >> 8) & 0xff, v4_ & 0xff);
  return buf;
}

std::optional<IpAddr> IpAddr::parse(std::string_view dotted) {
  std::uint32_t value = 0;
  const char* p = dotted.data();
  const char* end = dotted.data() + dotted.size();
  for (int octet = 0; octet < 4; ++octet) {
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || part > 255) return std::nullopt;
    value = (value << 8) | part;
    p = next;
    if (octet < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return IpAddr(value);
}

Segment make_segment(Port src, Port dest, SeqNum seq, SeqNum ack, FlagSet flags,
                     std::vector<std::uint8_t> payload) {
  Segment segment;
  segment.src_port = src;
  segment.dest_port = dest;
  segment.seq_num = seq;
  segment.ack_num = ack;
  segment.flags = flags;
  segment.window = 26883;
  segment.length = static_cast<std::uint32_t>(payload.size());
  segment.payload = std::move(payload);
  return segment;
}

std::string event_mask_name(EventMask mask) {
  struct Entry {
    SocketEvent event;
    std::string_view name;
  };
  static constexpr Entry kNames[] = {
      {SocketEvent::Connected, "CONNECTED"},
      {SocketEvent::Closed, "CLOSED"},
      {SocketEvent::TxReady, "TX_READY"},
      {SocketEvent::TxDone, "TX_DONE"},
      {SocketEvent::RxReady, "RX_READY"},
      {SocketEvent::LinkReset, "LINK_RESET"},
  };
  if (mask.empty()) return "none";
  std::string out;
  for (const auto& [event, name] : kNames) {
    if (!mask.has(event)) continue;
    if (!out.empty()) out += '+';
    out += name;
  }
  return out;
}

SocketModel to_model(const Socket& socket) {
  SocketModel model;
  model.sock_type = socket.sock_type;
  model.protocol = socket.protocol;
  model.local_ip = socket.local_ip;
  model.local_port = socket.local_port;
  model.remote_ip = socket.remote_ip;
  model.remote_port = socket.remote_port;
  model.state = socket.state;
  model.reset_flag = socket.reset_flag;
  model.snd_nxt = socket.snd_nxt;
  model.rcv_nxt = socket.rcv_nxt;
  return model;
}

std::string model_to_string(const SocketModel& model) {
  std::string out = "{state=";
  out += state_name(model.state);
  out += " local=" + model.local_ip.to_string() + ":" +
         std::to_string(model.local_port);
  out += " remote=" + model.remote_ip.to_string() + ":" +
         std::to_string(model.remote_port);
  out += " snd_nxt=" + std::to_string(model.snd_nxt);
  out += " rcv_nxt=" + std::to_string(model.rcv_nxt);
  out += model.reset_flag ? " reset" : "";
  out += "}";
  return out;
}

}  // namespace tcpconform
