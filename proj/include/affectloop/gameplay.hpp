#pragma once

// In-world mechanics: block details, tripwire events, the creature (hostility
// modes, behaviour state machine, spawn schedule), avatar movement and
// stamina, sanity and fear, win/lose evaluation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "affectloop/error.hpp"
#include "affectloop/random.hpp"
#include "affectloop/worldgen.hpp"

namespace affectloop::gameplay {

using worldgen::BlockId;
using worldgen::BlockType;
using worldgen::Vec2;
using worldgen::WorldGraph;

// ---------------------------------------------------------------------------
// Block details

enum class DetailKind : std::uint8_t {
  Paper1, Paper2, Paper3, Paper4, Paper5, Paper6, Paper7,
  Chalk1, Chalk2, Chalk3, Chalk4, Chalk5,
  WallLight, WaterDripping, VerticalPipe, Steam, WaterSplash,
};

inline constexpr std::size_t kDetailKindCount = 17;

inline std::string detail_name(DetailKind k) {
  const auto i = static_cast<int>(k);
  if (i < 7) return "Paper_" + std::to_string(i + 1);
  if (i < 12) return "Chalk_" + std::to_string(i - 6);
  static constexpr std::string_view env[] = {"WallLight", "WaterDripping", "VerticalPipe", "Steam", "WaterSplash"};
  return "Env_" + std::string(env[i - 12]);
}

// Delays are counted in spawned blocks.
struct DetailConfig {
  int paper_delay = 10;
  int chalk_delay = 5;
  int env_delay = 2;

  int delay_of(DetailKind k) const {
    const auto i = static_cast<int>(k);
    return i < 7 ? paper_delay : (i < 12 ? chalk_delay : env_delay);
  }
};

struct DetailDelays {
  std::array<int, kDetailKindCount> remaining{};

  void on_block_spawned() {
    for (int& r : remaining) r = r > 0 ? r - 1 : 0;
  }
  friend bool operator==(const DetailDelays&, const DetailDelays&) = default;
};

// Uniform pick among kinds not on delay; the chosen kind's delay restarts.
// Empty slot when every kind is delayed.
inline std::optional<DetailKind> select_detail(Rng& rng, DetailDelays& delays, const DetailConfig& cfg) {
  std::array<DetailKind, kDetailKindCount> eligible{};
  std::size_t n = 0;
  for (std::size_t i = 0; i < kDetailKindCount; ++i)
    if (delays.remaining[i] == 0) eligible[n++] = static_cast<DetailKind>(i);
  if (n == 0) return std::nullopt;
  const DetailKind k = eligible[rng.below(n)];
  delays.remaining[static_cast<std::size_t>(k)] = cfg.delay_of(k);
  return k;
}

// ---------------------------------------------------------------------------
// Environmental events

enum class EnvEventKind : std::uint8_t { Explosion, Bugs, LightBlast, PipeSteamBurst, PipeWaterBurst, PipeFall };

inline constexpr std::size_t kEnvEventKindCount = 6;

inline constexpr EnvEventKind kAllEnvEventKinds[] = {EnvEventKind::Explosion,      EnvEventKind::Bugs,
                                                     EnvEventKind::LightBlast,     EnvEventKind::PipeSteamBurst,
                                                     EnvEventKind::PipeWaterBurst, EnvEventKind::PipeFall};

inline std::string_view to_string(EnvEventKind k) {
  switch (k) {
  case EnvEventKind::Explosion: return "Explosion";
  case EnvEventKind::Bugs: return "Bugs";
  case EnvEventKind::LightBlast: return "LightBlast";
  case EnvEventKind::PipeSteamBurst: return "PipeSteamBurst";
  case EnvEventKind::PipeWaterBurst: return "PipeWaterBurst";
  case EnvEventKind::PipeFall: return "PipeFall";
  }
  return "?";
}

inline std::optional<EnvEventKind> env_event_from_string(std::string_view s) {
  for (EnvEventKind k : kAllEnvEventKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Re-arm delay in spawned blocks; the explosion has none but fires once.
inline constexpr int event_delay_blocks(EnvEventKind k) {
  switch (k) {
  case EnvEventKind::Explosion: return 0;
  case EnvEventKind::Bugs: return 20;
  case EnvEventKind::LightBlast: return 15;
  case EnvEventKind::PipeSteamBurst: return 15;
  case EnvEventKind::PipeWaterBurst: return 15;
  case EnvEventKind::PipeFall: return 10;
  }
  return 0;
}

inline constexpr bool is_one_shot(EnvEventKind k) { return k == EnvEventKind::Explosion; }

struct EventTrigger {
  EnvEventKind kind = EnvEventKind::Bugs;
  double probability = 0.35;
  int delay_blocks = 0;
  int remaining_delay = 0;
  bool fired_once = false;

  static EventTrigger make(EnvEventKind k, double probability) {
    return {k, probability, event_delay_blocks(k), 0, false};
  }

  bool armed() const { return remaining_delay == 0 && !(is_one_shot(kind) && fired_once); }

  void on_block_spawned() {
    if (remaining_delay > 0) --remaining_delay;
  }

  friend bool operator==(const EventTrigger&, const EventTrigger&) = default;
};

struct EventOccurrence {
  EnvEventKind kind;
};

// Player stepped on the trigger. One uniform draw is consumed whether or not
// the trigger is armed, so the stream position does not depend on history.
// `scale` multiplies the base probability (the adaptation hook).
inline std::optional<EventOccurrence> try_trigger(EventTrigger& trigger, Rng& rng, double scale = 1.0) {
  const double draw = rng.uniform();
  if (!trigger.armed()) return std::nullopt;
  const double p = std::clamp(trigger.probability * scale, 0.0, 1.0);
  if (!(draw < p)) return std::nullopt;
  trigger.remaining_delay = trigger.delay_blocks;
  if (is_one_shot(trigger.kind)) trigger.fired_once = true;
  return EventOccurrence{trigger.kind};
}

// ---------------------------------------------------------------------------
// Creature

enum class Hostility : std::uint8_t { Passive, PassiveAggressive, Aggressive };
enum class FsmState : std::uint8_t { Passive, Searching, Chasing, Retreat };

inline std::string_view to_string(Hostility h) {
  switch (h) {
  case Hostility::Passive: return "Passive";
  case Hostility::PassiveAggressive: return "PassiveAggressive";
  case Hostility::Aggressive: return "Aggressive";
  }
  return "?";
}

inline std::string_view to_string(FsmState s) {
  switch (s) {
  case FsmState::Passive: return "Passive";
  case FsmState::Searching: return "Searching";
  case FsmState::Chasing: return "Chasing";
  case FsmState::Retreat: return "Retreat";
  }
  return "?";
}

inline constexpr int kMaxRetreats = 3;
inline constexpr std::uint64_t kAggressiveBlockCount = 30;

struct CreatureConfig {
  double proximity = 2.0;      // cells
  double attack_range = 0.5;   // cells
  int escape_blocks = 2;       // hops between creature and player blocks
  double speed = 3.5;          // cells per second
  double chase_probability = 0.5; // PassiveAggressive: chase instead of retreat
  double p0 = 0.05;
  double k = 0.005;
  double pmax = 0.5;
};

struct CreatureState {
  Hostility hostility = Hostility::Passive;
  FsmState fsm = FsmState::Passive;
  int retreat_count = 0;
  bool spawned = false;
  BlockId block = 0;
  int anchor_index = 0;
  Vec2 position;
  std::optional<Vec2> retreat_target;

  friend bool operator==(const CreatureState&, const CreatureState&) = default;
};

struct HostilityContext {
  int folders = 0;
  std::uint64_t total_spawned = 0;
  int retreat_count = 0;
};

// Hostility never downgrades.
inline Hostility update_hostility(Hostility current, const HostilityContext& ctx) {
  Hostility target = Hostility::Passive;
  if (ctx.folders >= 1) target = Hostility::PassiveAggressive;
  if (ctx.total_spawned >= kAggressiveBlockCount || ctx.folders >= 2 || ctx.retreat_count >= kMaxRetreats)
    target = Hostility::Aggressive;
  return std::max(current, target);
}

// What the creature sees of the player.
struct AvatarView {
  Vec2 position;
  BlockId block = 0;
  bool crouched = false;
  bool in_evasion_tunnel = false;
};

struct FsmResult {
  FsmState from = FsmState::Passive;
  FsmState to = FsmState::Passive;
  bool despawn = false;
  bool kill = false;
  bool retreat_increment = false;
  bool chase_started = false;
};

inline bool fsm_invariant_holds(const CreatureState& c) {
  if (c.retreat_count < 0 || c.retreat_count > kMaxRetreats) return false;
  if (c.retreat_count == kMaxRetreats && c.hostility != Hostility::Aggressive) return false;
  if (c.fsm == FsmState::Searching && c.hostility != Hostility::Aggressive) return false;
  return true;
}

// Legal edges of the behaviour machine (self-loops included).
inline bool is_legal_transition(FsmState from, FsmState to) {
  if (from == to) return true;
  switch (from) {
  case FsmState::Passive: return to == FsmState::Chasing;
  case FsmState::Searching: return to == FsmState::Chasing;
  case FsmState::Chasing: return to == FsmState::Retreat;
  case FsmState::Retreat: return to == FsmState::Searching || to == FsmState::Passive;
  }
  return false;
}

namespace detail {

inline Vec2 move_toward(Vec2 from, Vec2 to, double step) {
  const double d = worldgen::distance(from, to);
  if (d <= step || d == 0.0) return to;
  return {from.x + (to.x - from.x) * step / d, from.y + (to.y - from.y) * step / d};
}

inline void record_retreat(CreatureState& c, FsmResult& r) {
  if (c.hostility == Hostility::Aggressive) return;
  c.retreat_count = std::min(kMaxRetreats, c.retreat_count + 1);
  r.retreat_increment = true;
}

inline void despawn(CreatureState& c, FsmResult& r) {
  c.spawned = false;
  c.retreat_target.reset();
  r.despawn = true;
}

// The block the creature stands in, if any.
inline void sync_block(CreatureState& c, const WorldGraph& world) {
  if (const auto* b = world.block_at(worldgen::cell_of(c.position))) c.block = b->id;
}

} // namespace detail

// One behaviour update of a spawned creature over dt seconds.
inline FsmResult step_fsm(CreatureState& c, const AvatarView& avatar, const WorldGraph& world, Rng& rng,
                          const CreatureConfig& cfg, double dt) {
  if (!c.spawned) throw Error("step_fsm: creature is not spawned");
  if (!fsm_invariant_holds(c)) throw Error("step_fsm: creature state violates its invariant");
  FsmResult r;
  r.from = c.fsm;
  const double dist = worldgen::distance(c.position, avatar.position);
  const bool near = dist <= cfg.proximity;

  switch (c.fsm) {
  case FsmState::Passive:
    if (!near) break;
    if (c.hostility == Hostility::Aggressive ||
        (c.hostility == Hostility::PassiveAggressive && rng.bernoulli(cfg.chase_probability))) {
      c.fsm = FsmState::Chasing;
      r.chase_started = true;
    } else {
      detail::record_retreat(c, r);
      detail::despawn(c, r);
    }
    break;

  case FsmState::Searching:
    if (near) {
      c.fsm = FsmState::Chasing;
      r.chase_started = true;
    }
    break;

  case FsmState::Chasing: {
    const auto hops = worldgen::hop_distance(world, c.block, avatar.block);
    if (!hops || *hops > cfg.escape_blocks) {
      detail::despawn(c, r);
    } else if (avatar.in_evasion_tunnel && avatar.crouched) {
      c.fsm = FsmState::Retreat;
      detail::record_retreat(c, r);
      // Head for the centre of the neighbouring block farthest from the player.
      Vec2 target = worldgen::centre_of(world.block(c.block).cell);
      double best = -1.0;
      for (BlockId n : world.block(c.block).linked()) {
        const Vec2 centre = worldgen::centre_of(world.block(n).cell);
        const double d = worldgen::distance(centre, avatar.position);
        if (d > best) {
          best = d;
          target = centre;
        }
      }
      c.retreat_target = target;
    } else if (dist <= cfg.attack_range) {
      r.kill = true;
    } else {
      c.position = detail::move_toward(c.position, avatar.position, cfg.speed * dt);
      detail::sync_block(c, world);
      if (worldgen::distance(c.position, avatar.position) <= cfg.attack_range) r.kill = true;
    }
    break;
  }

  case FsmState::Retreat: {
    const Vec2 target = c.retreat_target.value_or(worldgen::centre_of(world.block(c.block).cell));
    c.position = detail::move_toward(c.position, target, cfg.speed * dt);
    detail::sync_block(c, world);
    if (c.position == target) {
      c.retreat_target.reset();
      // Searching is the aggressive idle state; otherwise it waits passively.
      c.fsm = c.hostility == Hostility::Aggressive ? FsmState::Searching : FsmState::Passive;
    }
    break;
  }
  }
  r.to = c.fsm;
  return r;
}

struct CreaturePlacement {
  BlockId block = 0;
  int anchor_index = 0;
  Vec2 position;
};

// Affine spawn schedule in the number of blocks spawned so far, capped at pmax.
inline double spawn_probability(const CreatureConfig& cfg, std::uint64_t total_spawned) {
  return std::clamp(cfg.p0 + cfg.k * static_cast<double>(total_spawned), 0.0, cfg.pmax);
}

inline bool has_creature_anchors(BlockType t) { return t != BlockType::ExitRoom; }

// Creature anchor points sit just inside each block end.
inline Vec2 creature_anchor_position(const worldgen::Block& b, int anchor_index) {
  const Vec2 c = worldgen::centre_of(b.cell);
  const Vec2 u = worldgen::unit(b.anchors[static_cast<std::size_t>(anchor_index)].dir);
  return {c.x + 0.35 * u.x, c.y + 0.35 * u.y};
}

// Best anchor = the one farthest from the player.
inline int best_creature_anchor(const worldgen::Block& b, Vec2 player) {
  int best = 0;
  double best_d = -1.0;
  for (int i = 0; i < static_cast<int>(b.anchors.size()); ++i) {
    const double d = worldgen::distance(creature_anchor_position(b, i), player);
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

// Newly spawned block rolls for the creature. One draw is always consumed.
inline std::optional<CreaturePlacement> maybe_spawn_creature(const worldgen::Block& block, const WorldGraph& world,
                                                             Vec2 player, Rng& rng, const CreatureConfig& cfg,
                                                             double scale) {
  const double draw = rng.uniform();
  if (!has_creature_anchors(block.type) || block.anchors.empty()) return std::nullopt;
  const double p = std::clamp(spawn_probability(cfg, world.total_spawned()) * scale, 0.0, 1.0);
  if (!(draw < p)) return std::nullopt;
  const int anchor = best_creature_anchor(block, player);
  return CreaturePlacement{block.id, anchor, creature_anchor_position(block, anchor)};
}

inline void place_creature(CreatureState& c, const CreaturePlacement& p) {
  c.spawned = true;
  c.block = p.block;
  c.anchor_index = p.anchor_index;
  c.position = p.position;
  c.retreat_target.reset();
  c.fsm = c.hostility == Hostility::Aggressive ? FsmState::Searching : FsmState::Passive;
}

// ---------------------------------------------------------------------------
// Avatar

enum class MovementMode : std::uint8_t { Walk, Sprint, Crouch };
enum class Action : std::uint8_t { Walk, Sprint, Crouch, Interact };

inline std::string_view to_string(MovementMode m) {
  switch (m) {
  case MovementMode::Walk: return "Walk";
  case MovementMode::Sprint: return "Sprint";
  case MovementMode::Crouch: return "Crouch";
  }
  return "?";
}

struct MovementConfig {
  double base_speed = 3.0;        // cells per second
  double sprint_mult = 1.6;
  double crouch_mult = 0.5;
  double stamina_duration = 6.0;  // seconds of sprint from full stamina
  double stamina_regen_time = 10.0; // seconds from empty to full
};

// Adjustments pushed by the visible-feedback rules.
struct MovementModifiers {
  double sprint_speed_mult = 1.0;
  double sprint_duration_mult = 1.0;
};

inline constexpr int kMaxFolders = 2;
inline constexpr int kMaxSanity = 4;

struct AvatarState {
  Vec2 position;
  BlockId block = 0;
  MovementMode movement_mode = MovementMode::Walk;
  double speed = 0.0;
  double stamina = 1.0;
  int sanity = 1;
  int folders = 0;
  double fear_intensity = 0.0;
  bool camera_shake = false;
  bool fainted = false;
  double faint_remaining = 0.0;
  // Sanity-level effects.
  bool heavy_breathing = false;
  bool auditory_hallucinations = false;
  bool dizzy_bugs = false;

  friend bool operator==(const AvatarState&, const AvatarState&) = default;
};

// Movement mode, speed and stamina for one tick. Interact picks up a folder
// when one is within reach. Actions while fainted are ignored.
inline AvatarState update_avatar(AvatarState a, Action action, double dt, const MovementConfig& cfg,
                                 const MovementModifiers& mods = {}, bool folder_in_reach = false) {
  if (a.fainted) {
    a.speed = 0.0;
    return a;
  }
  const double duration = cfg.stamina_duration * mods.sprint_duration_mult;
  const bool can_sprint = a.stamina > 0.0;
  double mult = 1.0;
  switch (action) {
  case Action::Sprint:
    if (can_sprint) {
      a.movement_mode = MovementMode::Sprint;
      mult = cfg.sprint_mult * mods.sprint_speed_mult;
      a.stamina = std::max(0.0, a.stamina - dt / duration);
    } else {
      a.movement_mode = MovementMode::Walk;
    }
    break;
  case Action::Crouch:
    a.movement_mode = MovementMode::Crouch;
    mult = cfg.crouch_mult;
    break;
  case Action::Walk:
    a.movement_mode = MovementMode::Walk;
    break;
  case Action::Interact:
    if (folder_in_reach && a.folders < kMaxFolders) ++a.folders;
    break;
  }
  if (a.movement_mode != MovementMode::Sprint || !can_sprint)
    a.stamina = std::min(1.0, a.stamina + dt / cfg.stamina_regen_time);
  a.speed = cfg.base_speed * mult;
  return a;
}

enum class SanityTrigger : std::uint8_t { EnvironmentalEvent, CreatureAppearance };

inline void apply_sanity_effects(AvatarState& a) {
  a.heavy_breathing = a.sanity >= 2;
  a.auditory_hallucinations = a.sanity >= 3;
  a.dizzy_bugs = a.sanity >= 4;
}

// Every event or creature appearance pushes the avatar one level toward
// insanity; there is no recovery within a session.
inline AvatarState update_sanity(AvatarState a, SanityTrigger) {
  a.sanity = std::min(kMaxSanity, a.sanity + 1);
  apply_sanity_effects(a);
  return a;
}

enum class FearSource : std::uint8_t { Environmental, Creature };

struct FearEffect {
  double intensity = 0.0;
  bool shake = false;
};

inline constexpr double kEnvironmentalFear = 0.3;
inline constexpr double kCreatureFear = 0.7;

inline FearEffect fear_intensity(FearSource source, bool chasing_and_looking) {
  if (chasing_and_looking) return {1.0, true};
  return {source == FearSource::Creature ? kCreatureFear : kEnvironmentalFear, false};
}

// ---------------------------------------------------------------------------
// Outcome

enum class Outcome : std::uint8_t { Ongoing, Win, Lose };

inline std::string_view to_string(Outcome o) {
  switch (o) {
  case Outcome::Ongoing: return "Ongoing";
  case Outcome::Win: return "Win";
  case Outcome::Lose: return "Lose";
  }
  return "?";
}

inline Outcome check_outcome(const AvatarState& a, const WorldGraph& world, bool killed) {
  if (killed) return Outcome::Lose;
  if (a.folders >= kMaxFolders && world.contains(a.block) && world.block(a.block).type == BlockType::ExitRoom)
    return Outcome::Win;
  return Outcome::Ongoing;
}

} // namespace affectloop::gameplay
