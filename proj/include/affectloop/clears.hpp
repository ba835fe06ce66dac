#pragma once

// Adaptation rules: map the classified emotional state to gameplay directives
// under the session's feedback condition.
//
//   NBF    no directives (control)
//   NVIBF  hidden changes to creature/event odds and level generation weights
//   VIBF   visible changes to the character: sprint, heartbeat, fainting,
//          hallucinations, breathing, tunnel vision
//
// All modulation is linear in the deviation from the neutral baseline and
// clamped, so each rule is monotone in its driving dimension.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "affectloop/av_core.hpp"
#include "affectloop/text.hpp"

namespace affectloop::clears {

enum class Condition : std::uint8_t { NBF, VIBF, NVIBF };

inline std::string_view to_string(Condition c) {
  switch (c) {
  case Condition::NBF: return "nbf";
  case Condition::VIBF: return "vibf";
  case Condition::NVIBF: return "nvibf";
  }
  return "?";
}

inline std::optional<Condition> condition_from_string(std::string_view s) {
  if (s == "nbf") return Condition::NBF;
  if (s == "vibf") return Condition::VIBF;
  if (s == "nvibf") return Condition::NVIBF;
  return std::nullopt;
}

enum class ObjectiveTarget : std::uint8_t { KeyRooms, ExitRoom };

struct ScaleCreatureProbability {
  double factor = 1.0;
  friend bool operator==(const ScaleCreatureProbability&, const ScaleCreatureProbability&) = default;
};
struct ScaleEnvEventProbability {
  double factor = 1.0;
  friend bool operator==(const ScaleEnvEventProbability&, const ScaleEnvEventProbability&) = default;
};
struct ScaleObjectiveRoomWeight {
  ObjectiveTarget target = ObjectiveTarget::KeyRooms;
  double factor = 1.0;
  friend bool operator==(const ScaleObjectiveRoomWeight&, const ScaleObjectiveRoomWeight&) = default;
};
struct ScaleEvasionTunnelWeight {
  double factor = 1.0;
  friend bool operator==(const ScaleEvasionTunnelWeight&, const ScaleEvasionTunnelWeight&) = default;
};
struct SetSprintParams {
  double speed_mult = 1.0;
  double duration_mult = 1.0;
  friend bool operator==(const SetSprintParams&, const SetSprintParams&) = default;
};
struct SetHeartbeatIntensity {
  double intensity = 0.0;
  friend bool operator==(const SetHeartbeatIntensity&, const SetHeartbeatIntensity&) = default;
};
struct TriggerFaint {
  friend bool operator==(const TriggerFaint&, const TriggerFaint&) = default;
};
struct SetHallucinations {
  bool on = false;
  friend bool operator==(const SetHallucinations&, const SetHallucinations&) = default;
};
struct SetBreathing {
  bool scared = false;
  friend bool operator==(const SetBreathing&, const SetBreathing&) = default;
};
struct SetTunnelVision {
  double intensity = 0.0;
  friend bool operator==(const SetTunnelVision&, const SetTunnelVision&) = default;
};

using Directive = std::variant<ScaleCreatureProbability, ScaleEnvEventProbability, ScaleObjectiveRoomWeight,
                               ScaleEvasionTunnelWeight, SetSprintParams, SetHeartbeatIntensity, TriggerFaint,
                               SetHallucinations, SetBreathing, SetTunnelVision>;

inline std::string format_directive(const Directive& d) {
  auto f = [](double v) { return text::format_fixed(v, 6); };
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ScaleCreatureProbability>) return "ScaleCreatureProbability\t" + f(x.factor);
        else if constexpr (std::is_same_v<T, ScaleEnvEventProbability>)
          return "ScaleEnvEventProbability\t" + f(x.factor);
        else if constexpr (std::is_same_v<T, ScaleObjectiveRoomWeight>)
          return std::string("ScaleObjectiveRoomWeight\t") +
                 (x.target == ObjectiveTarget::KeyRooms ? "KeyRooms" : "ExitRoom") + "," + f(x.factor);
        else if constexpr (std::is_same_v<T, ScaleEvasionTunnelWeight>)
          return "ScaleEvasionTunnelWeight\t" + f(x.factor);
        else if constexpr (std::is_same_v<T, SetSprintParams>)
          return "SetSprintParams\t" + f(x.speed_mult) + "," + f(x.duration_mult);
        else if constexpr (std::is_same_v<T, SetHeartbeatIntensity>) return "SetHeartbeatIntensity\t" + f(x.intensity);
        else if constexpr (std::is_same_v<T, TriggerFaint>) return "TriggerFaint\t";
        else if constexpr (std::is_same_v<T, SetHallucinations>)
          return std::string("SetHallucinations\t") + (x.on ? "on" : "off");
        else if constexpr (std::is_same_v<T, SetBreathing>)
          return std::string("SetBreathing\t") + (x.scared ? "scared" : "normal");
        else return "SetTunnelVision\t" + f(x.intensity);
      },
      d);
}

inline std::string_view directive_name(const Directive& d) {
  static constexpr std::string_view names[] = {
      "ScaleCreatureProbability", "ScaleEnvEventProbability", "ScaleObjectiveRoomWeight", "ScaleEvasionTunnelWeight",
      "SetSprintParams",          "SetHeartbeatIntensity",    "TriggerFaint",             "SetHallucinations",
      "SetBreathing",             "SetTunnelVision"};
  return names[d.index()];
}

struct NeutralBaseline {
  double arousal0 = kScaleNeutral;
  double valence0 = kScaleNeutral;
};

struct ClearsConfig {
  double beta = 1.0;  // arousal gain (creature / environment odds)
  double gamma = 1.0; // valence gain (objective / evasion weights)
  double min_factor = 0.25;
  double max_factor = 4.0;
  double sprint_gain = 0.5;
  double sprint_min = 0.5;
  double sprint_max = 1.5;
  double faint_arousal = 9.5;
  double hallucination_arousal = 8.0;
  double hallucination_valence = 2.0;
};

struct GameContext {
  int folders = 0;
  bool chasing = false;
};

inline double clamp_factor(double f, const ClearsConfig& cfg) { return std::clamp(f, cfg.min_factor, cfg.max_factor); }

inline std::vector<Directive> decide_nvibf(const EmotionalState& es, const GameContext& ctx,
                                           const NeutralBaseline& baseline, const ClearsConfig& cfg = {}) {
  const double da = (es.arousal() - baseline.arousal0) / 5.0;
  const double dv = (baseline.valence0 - es.valence()) / 5.0; // positive when valence is low
  std::vector<Directive> out;
  out.push_back(ScaleCreatureProbability{clamp_factor(1.0 - cfg.beta * da, cfg)});
  out.push_back(ScaleEnvEventProbability{clamp_factor(1.0 + cfg.beta * da, cfg)});
  const auto target = ctx.folders < 2 ? ObjectiveTarget::KeyRooms : ObjectiveTarget::ExitRoom;
  out.push_back(ScaleObjectiveRoomWeight{target, clamp_factor(1.0 + cfg.gamma * dv, cfg)});
  // Outside a chase the evasion weight returns to neutral.
  out.push_back(ScaleEvasionTunnelWeight{ctx.chasing ? clamp_factor(1.0 + cfg.gamma * dv, cfg) : 1.0});
  return out;
}

inline bool faint_condition(const EmotionalState& es, const ClearsConfig& cfg = {}) {
  return es.arousal() >= cfg.faint_arousal;
}

inline bool hallucination_condition(const EmotionalState& es, const ClearsConfig& cfg = {}) {
  return es.arousal() >= cfg.hallucination_arousal || es.valence() <= cfg.hallucination_valence;
}

inline std::vector<Directive> decide_vibf(const EmotionalState& es, const NeutralBaseline& baseline,
                                          const ClearsConfig& cfg = {}) {
  const double da = (es.arousal() - baseline.arousal0) / 5.0;
  std::vector<Directive> out;
  out.push_back(SetSprintParams{std::clamp(1.0 + cfg.sprint_gain * da, cfg.sprint_min, cfg.sprint_max),
                                std::clamp(1.0 - cfg.sprint_gain * da, cfg.sprint_min, cfg.sprint_max)});
  out.push_back(SetHeartbeatIntensity{std::clamp(da, 0.0, 1.0)});
  if (faint_condition(es, cfg)) out.push_back(TriggerFaint{});
  out.push_back(SetHallucinations{hallucination_condition(es, cfg)});
  out.push_back(SetBreathing{es.arousal() > baseline.arousal0});
  double tunnel = 0.0;
  if (es.valence() < baseline.valence0 && baseline.valence0 > 0.0)
    tunnel = std::clamp((baseline.valence0 - es.valence()) / baseline.valence0, 0.0, 1.0);
  out.push_back(SetTunnelVision{tunnel});
  return out;
}

inline std::vector<Directive> decide(Condition condition, const EmotionalState& es, const GameContext& ctx,
                                     const NeutralBaseline& baseline, const ClearsConfig& cfg = {}) {
  switch (condition) {
  case Condition::NBF: return {};
  case Condition::VIBF: return decide_vibf(es, baseline, cfg);
  case Condition::NVIBF: return decide_nvibf(es, ctx, baseline, cfg);
  }
  return {};
}

} // namespace affectloop::clears
