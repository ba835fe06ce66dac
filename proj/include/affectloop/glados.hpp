#pragma once

// Execution layer: applies adaptation directives to the live game parameters
// and keeps the canonical, time-ordered event log.
//
// Event log text format (UTF-8, LF):
//   timestamp<TAB>kind<TAB>k=v;k=v<TAB>comment
// Timestamps are decimal seconds with at most three fractional digits. Inside
// params and comments, `\`, TAB, LF, CR, `;` and `=` are backslash-escaped.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "affectloop/clears.hpp"
#include "affectloop/error.hpp"
#include "affectloop/gameplay.hpp"
#include "affectloop/text.hpp"

namespace affectloop::glados {

enum class EventKind : std::uint8_t {
  EnvEvent,
  CreatureSpawn,
  CreatureChaseStart,
  CreatureRetreat,
  FolderPickup,
  Faint,
  SanityLevelUp,
  BlockSpawn,
  Win,
  Lose,
};

inline constexpr EventKind kAllEventKinds[] = {
    EventKind::EnvEvent,     EventKind::CreatureSpawn, EventKind::CreatureChaseStart, EventKind::CreatureRetreat,
    EventKind::FolderPickup, EventKind::Faint,         EventKind::SanityLevelUp,      EventKind::BlockSpawn,
    EventKind::Win,          EventKind::Lose,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
  case EventKind::EnvEvent: return "EnvEvent";
  case EventKind::CreatureSpawn: return "CreatureSpawn";
  case EventKind::CreatureChaseStart: return "CreatureChaseStart";
  case EventKind::CreatureRetreat: return "CreatureRetreat";
  case EventKind::FolderPickup: return "FolderPickup";
  case EventKind::Faint: return "Faint";
  case EventKind::SanityLevelUp: return "SanityLevelUp";
  case EventKind::BlockSpawn: return "BlockSpawn";
  case EventKind::Win: return "Win";
  case EventKind::Lose: return "Lose";
  }
  return "?";
}

struct EventRecord {
  double timestamp = 0.0;
  EventKind kind = EventKind::EnvEvent;
  std::optional<gameplay::EnvEventKind> env_kind; // set iff kind == EnvEvent
  std::vector<std::pair<std::string, std::string>> params;
  std::string comment;

  // `EnvEvent:Bugs` for environmental events, the bare kind otherwise.
  std::string kind_label() const {
    std::string s(to_string(kind));
    if (kind == EventKind::EnvEvent && env_kind) s += ":" + std::string(gameplay::to_string(*env_kind));
    return s;
  }

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

inline EventRecord make_event(double t, EventKind kind, std::vector<std::pair<std::string, std::string>> params = {},
                              std::string comment = {}) {
  return {t, kind, std::nullopt, std::move(params), std::move(comment)};
}

inline EventRecord make_env_event(double t, gameplay::EnvEventKind k,
                                  std::vector<std::pair<std::string, std::string>> params = {}) {
  return {t, EventKind::EnvEvent, k, std::move(params), {}};
}

inline std::optional<std::pair<EventKind, std::optional<gameplay::EnvEventKind>>> parse_kind_label(std::string_view s) {
  std::string_view head = s, tail;
  if (auto c = s.find(':'); c != std::string_view::npos) {
    head = s.substr(0, c);
    tail = s.substr(c + 1);
  }
  for (EventKind k : kAllEventKinds) {
    if (to_string(k) != head) continue;
    if (k == EventKind::EnvEvent) {
      if (tail.empty()) return std::make_pair(k, std::optional<gameplay::EnvEventKind>{});
      auto sub = gameplay::env_event_from_string(tail);
      if (!sub) return std::nullopt;
      return std::make_pair(k, std::optional<gameplay::EnvEventKind>{*sub});
    }
    if (!tail.empty()) return std::nullopt;
    return std::make_pair(k, std::optional<gameplay::EnvEventKind>{});
  }
  return std::nullopt;
}

inline std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
    case '\\': out += "\\\\"; break;
    case '\t': out += "\\t"; break;
    case '\n': out += "\\n"; break;
    case '\r': out += "\\r"; break;
    case ';': out += "\\;"; break;
    case '=': out += "\\="; break;
    default: out += c;
    }
  }
  return out;
}

inline std::optional<std::string> unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i >= s.size()) return std::nullopt;
    switch (s[i]) {
    case '\\': out += '\\'; break;
    case 't': out += '\t'; break;
    case 'n': out += '\n'; break;
    case 'r': out += '\r'; break;
    case ';': out += ';'; break;
    case '=': out += '='; break;
    default: return std::nullopt;
    }
  }
  return out;
}

// Splits on `sep` outside backslash escapes.
inline std::vector<std::string_view> split_escaped(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\') {
      ++i;
      continue;
    }
    if (s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(s.substr(start));
  return out;
}

inline std::string format_event(const EventRecord& r) {
  std::string params;
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    if (i) params += ';';
    params += escape_field(r.params[i].first) + '=' + escape_field(r.params[i].second);
  }
  return text::format_seconds(r.timestamp) + '\t' + r.kind_label() + '\t' + params + '\t' + escape_field(r.comment);
}

// Parses one exported line; nullopt with `why` filled on failure.
inline std::optional<EventRecord> parse_event_line(std::string_view line, std::string& why) {
  auto fields = text::split(line, '\t');
  if (fields.size() != 4) {
    why = "expected 4 tab-separated fields, got " + std::to_string(fields.size());
    return std::nullopt;
  }
  auto t = text::parse_double(fields[0]);
  if (!t || !std::isfinite(*t)) {
    why = "bad timestamp";
    return std::nullopt;
  }
  if (*t < 0.0) {
    why = "negative timestamp";
    return std::nullopt;
  }
  auto kind = parse_kind_label(fields[1]);
  if (!kind) {
    why = "unknown event kind '" + std::string(fields[1]) + "'";
    return std::nullopt;
  }
  EventRecord r;
  r.timestamp = text::round_millis(*t);
  r.kind = kind->first;
  r.env_kind = kind->second;
  if (!fields[2].empty()) {
    for (auto kv : split_escaped(fields[2], ';')) {
      auto parts = split_escaped(kv, '=');
      if (parts.size() != 2) {
        why = "malformed parameter '" + std::string(kv) + "'";
        return std::nullopt;
      }
      auto k = unescape_field(parts[0]);
      auto v = unescape_field(parts[1]);
      if (!k || !v) {
        why = "bad escape in parameters";
        return std::nullopt;
      }
      r.params.emplace_back(std::move(*k), std::move(*v));
    }
  }
  auto comment = unescape_field(fields[3]);
  if (!comment) {
    why = "bad escape in comment";
    return std::nullopt;
  }
  r.comment = std::move(*comment);
  return r;
}

// Append-only log with non-decreasing timestamps, stored at millisecond
// resolution so that the text export round-trips exactly.
class EventLog {
public:
  void log_event(EventRecord record) {
    if (!std::isfinite(record.timestamp) || record.timestamp < 0.0)
      throw LogError("event timestamp must be finite and non-negative");
    record.timestamp = text::round_millis(record.timestamp);
    if (!records_.empty() && record.timestamp < records_.back().timestamp)
      throw LogError("event timestamp " + text::format_seconds(record.timestamp) + " precedes last logged " +
                     text::format_seconds(records_.back().timestamp));
    if ((record.kind == EventKind::EnvEvent) != record.env_kind.has_value())
      throw LogError("environmental sub-kind must be set exactly for EnvEvent records");
    records_.push_back(std::move(record));
  }

  const std::vector<EventRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

private:
  std::vector<EventRecord> records_;
};

inline std::string export_log(std::span<const EventRecord> records) {
  std::string out;
  for (const auto& r : records) out += format_event(r) + '\n';
  return out;
}

inline std::string export_log(const EventLog& log) { return export_log(std::span<const EventRecord>(log.records())); }

// ---------------------------------------------------------------------------
// Directive application

// Effective game parameters as currently overridden by directives.
struct GladosState {
  double creature_scale = 1.0;
  double env_scale = 1.0;
  clears::ObjectiveTarget objective_target = clears::ObjectiveTarget::KeyRooms;
  double objective_factor = 1.0;
  double evasion_factor = 1.0;
  double sprint_speed_mult = 1.0;
  double sprint_duration_mult = 1.0;
  double heartbeat = 0.0;
  bool hallucinations = false;
  bool breathing_scared = false;
  double tunnel_vision = 0.0;
  bool faint_armed = true;
  bool faint_pending = false;

  friend bool operator==(const GladosState&, const GladosState&) = default;

  double key_room_factor() const {
    return objective_target == clears::ObjectiveTarget::KeyRooms ? objective_factor : 1.0;
  }
  double exit_room_factor() const {
    return objective_target == clears::ObjectiveTarget::ExitRoom ? objective_factor : 1.0;
  }
};

struct ApplyResult {
  GladosState state;
  // Directives that changed at least one effective parameter, in input order.
  std::vector<clears::Directive> effective;
};

// Last writer wins per category. TriggerFaint is edge-triggered: it raises
// faint_pending once, and re-arms only when a non-empty directive set arrives
// without it (the arousal has dropped below the faint threshold).
inline ApplyResult apply_directives(std::span<const clears::Directive> directives, GladosState state) {
  ApplyResult out;
  bool saw_faint = false;
  for (const auto& d : directives) {
    const GladosState before = state;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, clears::ScaleCreatureProbability>) state.creature_scale = x.factor;
          else if constexpr (std::is_same_v<T, clears::ScaleEnvEventProbability>) state.env_scale = x.factor;
          else if constexpr (std::is_same_v<T, clears::ScaleObjectiveRoomWeight>) {
            state.objective_target = x.target;
            state.objective_factor = x.factor;
          } else if constexpr (std::is_same_v<T, clears::ScaleEvasionTunnelWeight>) state.evasion_factor = x.factor;
          else if constexpr (std::is_same_v<T, clears::SetSprintParams>) {
            state.sprint_speed_mult = x.speed_mult;
            state.sprint_duration_mult = x.duration_mult;
          } else if constexpr (std::is_same_v<T, clears::SetHeartbeatIntensity>) state.heartbeat = x.intensity;
          else if constexpr (std::is_same_v<T, clears::TriggerFaint>) {
            saw_faint = true;
            if (state.faint_armed) {
              state.faint_armed = false;
              state.faint_pending = true;
            }
          } else if constexpr (std::is_same_v<T, clears::SetHallucinations>) state.hallucinations = x.on;
          else if constexpr (std::is_same_v<T, clears::SetBreathing>) state.breathing_scared = x.scared;
          else state.tunnel_vision = x.intensity;
        },
        d);
    if (!(state == before)) out.effective.push_back(d);
  }
  if (!directives.empty() && !saw_faint) state.faint_armed = true;
  out.state = state;
  return out;
}

inline GladosState apply(std::span<const clears::Directive> directives, const GladosState& state) {
  return apply_directives(directives, state).state;
}

// Level generation weights after objective and evasion overrides.
inline worldgen::TypeWeights effective_weights(const worldgen::TypeWeights& base, const GladosState& s) {
  using worldgen::BlockType;
  using worldgen::index_of;
  worldgen::TypeWeights w = base;
  w[index_of(BlockType::KeyRoom1)] *= s.key_room_factor();
  w[index_of(BlockType::KeyRoom2)] *= s.key_room_factor();
  w[index_of(BlockType::ExitRoom)] *= s.exit_room_factor();
  w[index_of(BlockType::EvasionTunnel)] *= s.evasion_factor;
  return w;
}

} // namespace affectloop::glados
