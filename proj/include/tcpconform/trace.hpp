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

#include <optional>
#include <string>
#include <vector>

#include "tcpconform/socket.hpp"
#include "tcpconform/types.hpp"

namespace tcpconform {

enum class TraceKind : std::uint8_t {
  StateChange,
  SegmentSent,
  SegmentReceived,
  UserCall,
  TimerFired,
  EventRaised,
};

std::string_view trace_kind_name(TraceKind kind);

// One scenario event. Serialized as a JSON line with keys in the fixed
// order (t, ep, kind, from, to, flags, detail); absent fields are
// omitted, so equal records always serialize to equal bytes.
struct TraceRecord {
  VirtualTime t = 0;
  int ep = 0;
  TraceKind kind = TraceKind::UserCall;
  std::optional<TcpState> from;
  std::optional<TcpState> to;
  std::optional<FlagSet> flags;
  std::string detail;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

std::string to_jsonl(const TraceRecord& record);
std::string to_jsonl(const std::vector<TraceRecord>& trace);
std::optional<TraceRecord> trace_record_from_jsonl(const std::string& line);
std::vector<TraceRecord> trace_from_jsonl(const std::string& text);

// Fixed-width human-readable rendering, one line per record.
std::string to_table(const std::vector<TraceRecord>& trace);

}  // namespace tcpconform
