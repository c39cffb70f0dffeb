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

#include "tcpconform/trace.hpp"

#include <array>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace tcpconform {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "StateChange", "SegmentSent",  "SegmentReceived",
    "UserCall",    "TimerFired",   "EventRaised",
};

std::optional<TraceKind> kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

void append_json_string(std::string& out, std::string_view value) {
  out += '"';
  for (char c : value) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

}  // namespace

std::string_view trace_kind_name(TraceKind kind) {
  return kKindNames[static_cast<std::size_t>(kind)];
}

// Hand-assembled so the key order is fixed byte for byte; traces are
// diffed as files.
std::string to_jsonl(const TraceRecord& record) {
  std::string out = "{\"t\":";
  out += std::to_string(record.t);
  out += ",\"ep\":";
  out += std::to_string(record.ep);
  out += ",\"kind\":";
  append_json_string(out, trace_kind_name(record.kind));
  if (record.from) {
    out += ",\"from\":";
    append_json_string(out, state_name(*record.from));
  }
  if (record.to) {
    out += ",\"to\":";
    append_json_string(out, state_name(*record.to));
  }
  if (record.flags) {
    out += ",\"flags\":";
    append_json_string(out, flags_name(*record.flags));
  }
  if (!record.detail.empty()) {
    out += ",\"detail\":";
    append_json_string(out, record.detail);
  }
  out += "}";
  return out;
}

std::string to_jsonl(const std::vector<TraceRecord>& trace) {
  std::string out;
  for (const TraceRecord& record : trace) {
    out += to_jsonl(record);
    out += '\n';
  }
  return out;
}

std::optional<TraceRecord> trace_record_from_jsonl(const std::string& line) {
  const auto json = nlohmann::json::parse(line, nullptr, false);
  if (json.is_discarded() || !json.is_object()) return std::nullopt;
  if (!json.contains("t") || !json.contains("ep") || !json.contains("kind")) {
    return std::nullopt;
  }

  TraceRecord record;
  record.t = json.at("t").get<VirtualTime>();
  record.ep = json.at("ep").get<int>();
  const auto kind = kind_from_name(json.at("kind").get<std::string>());
  if (!kind) return std::nullopt;
  record.kind = *kind;
  if (json.contains("from")) {
    record.from = state_from_name(json.at("from").get<std::string>());
    if (!record.from) return std::nullopt;
  }
  if (json.contains("to")) {
    record.to = state_from_name(json.at("to").get<std::string>());
    if (!record.to) return std::nullopt;
  }
  if (json.contains("flags")) {
    record.flags = flags_from_name(json.at("flags").get<std::string>());
    if (!record.flags) return std::nullopt;
  }
  if (json.contains("detail")) {
    record.detail = json.at("detail").get<std::string>();
  }
  return record;
}

std::vector<TraceRecord> trace_from_jsonl(const std::string& text) {
  std::vector<TraceRecord> out;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    if (auto record = trace_record_from_jsonl(line)) {
      out.push_back(std::move(*record));
    }
  }
  return out;
}

std::string to_table(const std::vector<TraceRecord>& trace) {
  std::string out;
  char buf[160];
  for (const TraceRecord& r : trace) {
    std::string transition;
    if (r.from && r.to) {
      transition = std::string(state_name(*r.from)) + " -> " +
                   std::string(state_name(*r.to));
    }
    std::snprintf(buf, sizeof(buf), "%6llu  %c  %-15s %-28s %-10s %s\n",
                  static_cast<unsigned long long>(r.t), r.ep == 0 ? 'a' : 'b',
                  std::string(trace_kind_name(r.kind)).c_str(),
                  transition.c_str(),
                  r.flags ? flags_name(*r.flags).c_str() : "",
                  r.detail.c_str());
    out += buf;
  }
  return out;
}

}  // namespace tcpconform
