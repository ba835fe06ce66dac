#pragma once

// Flat `key = value` scenario files. Dotted keys, `#` comments, blank lines.
// Every key must be known; later assignments override earlier ones.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/error.hpp"
#include "affectloop/simulator.hpp"
#include "affectloop/text.hpp"

namespace affectloop::config {

using sim::ScenarioConfig;

struct Key {
  std::string name;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

namespace detail {

inline double to_double(std::string_view key, std::string_view v) {
  auto d = text::parse_double(v);
  if (!d || !std::isfinite(*d)) throw ConfigError("'" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  return *d;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  auto i = text::parse_int<Int>(v);
  if (!i) throw ConfigError("'" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  return *i;
}

template <class Get>
Key real(std::string name, Get field) {
  return {name,
          [name, field](ScenarioConfig& c, std::string_view v) { field(c) = to_double(name, v); },
          [field](const ScenarioConfig& c) { return text::format_double(field(const_cast<ScenarioConfig&>(c))); }};
}

template <class Int, class Get>
Key integer(std::string name, Get field) {
  return {name,
          [name, field](ScenarioConfig& c, std::string_view v) { field(c) = to_int<Int>(name, v); },
          [field](const ScenarioConfig& c) { return std::to_string(field(const_cast<ScenarioConfig&>(c))); }};
}

inline void add_kernel(std::vector<Key>& keys, const std::string& prefix, sim::Kernel sim::SyntheticPlayerModel::*k) {
  keys.push_back(real(prefix + ".arousal", [k](ScenarioConfig& c) -> double& { return (c.player.*k).arousal; }));
  keys.push_back(real(prefix + ".valence", [k](ScenarioConfig& c) -> double& { return (c.player.*k).valence; }));
  keys.push_back(real(prefix + ".latency", [k](ScenarioConfig& c) -> double& { return (c.player.*k).latency; }));
  keys.push_back(real(prefix + ".tau", [k](ScenarioConfig& c) -> double& { return (c.player.*k).tau; }));
}

} // namespace detail

inline const std::vector<Key>& keys() {
  using detail::integer;
  using detail::real;
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(integer<std::uint64_t>("seed", [](ScenarioConfig& c) -> std::uint64_t& { return c.seed; }));
    k.push_back({"condition",
                 [](ScenarioConfig& c, std::string_view v) {
                   auto cond = clears::condition_from_string(v);
                   if (!cond) throw ConfigError("'condition': expected nbf, vibf or nvibf, got '" + std::string(v) + "'");
                   c.condition = *cond;
                 },
                 [](const ScenarioConfig& c) { return std::string(clears::to_string(c.condition)); }});
    k.push_back(real("duration", [](ScenarioConfig& c) -> double& { return c.duration; }));
    k.push_back(real("tick_period", [](ScenarioConfig& c) -> double& { return c.tick_period; }));

    k.push_back(integer<int>("piers.window_ticks", [](ScenarioConfig& c) -> int& { return c.piers_window_ticks; }));
    k.push_back(integer<int>("piers.smoothing_window", [](ScenarioConfig& c) -> int& { return c.piers_smoothing; }));

    for (auto t : worldgen::kAllBlockTypes) {
      const auto i = worldgen::index_of(t);
      k.push_back(real("worldgen.weight." + std::string(worldgen::to_string(t)),
                       [i](ScenarioConfig& c) -> double& { return c.block_weights[i]; }));
    }

    k.push_back(real("movement.base_speed", [](ScenarioConfig& c) -> double& { return c.movement.base_speed; }));
    k.push_back(real("movement.sprint_mult", [](ScenarioConfig& c) -> double& { return c.movement.sprint_mult; }));
    k.push_back(real("movement.crouch_mult", [](ScenarioConfig& c) -> double& { return c.movement.crouch_mult; }));
    k.push_back(
        real("movement.stamina_duration", [](ScenarioConfig& c) -> double& { return c.movement.stamina_duration; }));
    k.push_back(
        real("movement.stamina_regen_time", [](ScenarioConfig& c) -> double& { return c.movement.stamina_regen_time; }));

    k.push_back(real("creature.proximity", [](ScenarioConfig& c) -> double& { return c.creature.proximity; }));
    k.push_back(real("creature.attack_range", [](ScenarioConfig& c) -> double& { return c.creature.attack_range; }));
    k.push_back(integer<int>("creature.escape_blocks", [](ScenarioConfig& c) -> int& { return c.creature.escape_blocks; }));
    k.push_back(real("creature.speed", [](ScenarioConfig& c) -> double& { return c.creature.speed; }));
    k.push_back(
        real("creature.chase_probability", [](ScenarioConfig& c) -> double& { return c.creature.chase_probability; }));
    k.push_back(real("creature.p0", [](ScenarioConfig& c) -> double& { return c.creature.p0; }));
    k.push_back(real("creature.k", [](ScenarioConfig& c) -> double& { return c.creature.k; }));
    k.push_back(real("creature.pmax", [](ScenarioConfig& c) -> double& { return c.creature.pmax; }));
    k.push_back(real("creature.cooldown", [](ScenarioConfig& c) -> double& { return c.creature_cooldown; }));

    k.push_back(integer<int>("details.paper_delay", [](ScenarioConfig& c) -> int& { return c.details.paper_delay; }));
    k.push_back(integer<int>("details.chalk_delay", [](ScenarioConfig& c) -> int& { return c.details.chalk_delay; }));
    k.push_back(integer<int>("details.env_delay", [](ScenarioConfig& c) -> int& { return c.details.env_delay; }));
    k.push_back(integer<int>("details.slots", [](ScenarioConfig& c) -> int& { return c.detail_slots; }));

    for (auto e : gameplay::kAllEnvEventKinds) {
      const auto i = static_cast<std::size_t>(e);
      k.push_back(real("events.probability." + std::string(gameplay::to_string(e)),
                       [i](ScenarioConfig& c) -> double& { return c.event_probability[i]; }));
    }

    k.push_back(real("clears.beta", [](ScenarioConfig& c) -> double& { return c.clears.beta; }));
    k.push_back(real("clears.gamma", [](ScenarioConfig& c) -> double& { return c.clears.gamma; }));
    k.push_back(real("clears.min_factor", [](ScenarioConfig& c) -> double& { return c.clears.min_factor; }));
    k.push_back(real("clears.max_factor", [](ScenarioConfig& c) -> double& { return c.clears.max_factor; }));
    k.push_back(real("clears.sprint_gain", [](ScenarioConfig& c) -> double& { return c.clears.sprint_gain; }));
    k.push_back(real("clears.sprint_min", [](ScenarioConfig& c) -> double& { return c.clears.sprint_min; }));
    k.push_back(real("clears.sprint_max", [](ScenarioConfig& c) -> double& { return c.clears.sprint_max; }));
    k.push_back(real("clears.faint_arousal", [](ScenarioConfig& c) -> double& { return c.clears.faint_arousal; }));
    k.push_back(real("clears.hallucination_arousal",
                     [](ScenarioConfig& c) -> double& { return c.clears.hallucination_arousal; }));
    k.push_back(real("clears.hallucination_valence",
                     [](ScenarioConfig& c) -> double& { return c.clears.hallucination_valence; }));
    k.push_back(real("baseline.arousal", [](ScenarioConfig& c) -> double& { return c.baseline.arousal0; }));
    k.push_back(real("baseline.valence", [](ScenarioConfig& c) -> double& { return c.baseline.valence0; }));

    k.push_back(real("faint.blackout", [](ScenarioConfig& c) -> double& { return c.blackout; }));
    k.push_back(real("faint.creature_probability",
                     [](ScenarioConfig& c) -> double& { return c.faint_creature_probability; }));

    k.push_back({"player.policy",
                 [](ScenarioConfig& c, std::string_view v) {
                   auto p = sim::policy_from_string(v);
                   if (!p)
                     throw ConfigError("'player.policy': expected explorer, objective or fleer, got '" +
                                       std::string(v) + "'");
                   c.player.policy = *p;
                 },
                 [](const ScenarioConfig& c) { return std::string(sim::to_string(c.player.policy)); }});
    k.push_back({"player.neutral.arousal",
                 [](ScenarioConfig& c, std::string_view v) {
                   c.player.neutral = c.player.neutral.with_arousal(detail::to_double("player.neutral.arousal", v));
                 },
                 [](const ScenarioConfig& c) { return text::format_double(c.player.neutral.arousal()); }});
    k.push_back({"player.neutral.valence",
                 [](ScenarioConfig& c, std::string_view v) {
                   c.player.neutral = c.player.neutral.with_valence(detail::to_double("player.neutral.valence", v));
                 },
                 [](const ScenarioConfig& c) { return text::format_double(c.player.neutral.valence()); }});
    k.push_back(real("player.noise_sigma", [](ScenarioConfig& c) -> double& { return c.player.noise_sigma; }));
    k.push_back(real("player.channel_noise", [](ScenarioConfig& c) -> double& { return c.player.channel_noise; }));
    k.push_back(
        real("player.calibration_noise", [](ScenarioConfig& c) -> double& { return c.player.calibration_noise; }));
    detail::add_kernel(k, "player.kernel.creature", &sim::SyntheticPlayerModel::creature);
    detail::add_kernel(k, "player.kernel.environmental", &sim::SyntheticPlayerModel::environmental);
    detail::add_kernel(k, "player.kernel.folder", &sim::SyntheticPlayerModel::folder);
    return k;
  }();
  return table;
}

inline const Key* find_key(std::string_view name) {
  for (const auto& k : keys())
    if (k.name == name) return &k;
  return nullptr;
}

inline void set(ScenarioConfig& c, std::string_view key, std::string_view value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + std::string(key) + "'");
  k->set(c, value);
}

// Applies `content` on top of `base`. Errors name the line.
inline ScenarioConfig parse(std::string_view content, ScenarioConfig base = {}) {
  const auto ls = text::lines(content);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    auto line = ls[i];
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(i + 1) + ": expected 'key = value'");
    const auto key = text::trim(line.substr(0, eq));
    const auto value = text::trim(line.substr(eq + 1));
    try {
      set(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

inline std::string format(const ScenarioConfig& c) {
  std::string out;
  for (const auto& k : keys()) out += k.name + " = " + k.get(c) + '\n';
  return out;
}

} // namespace affectloop::config
