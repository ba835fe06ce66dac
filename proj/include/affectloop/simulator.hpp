#pragma once

// Deterministic session loop. Each tick:
//   1. the synthetic player turns past game events into an intended AV state
//      and emits a physiological sample consistent with it;
//   2. PIERS classifies the trailing window;
//   3. CLEARS decides directives for the session's condition;
//   4. GLaDOS applies them (logging every effective change);
//   5. the avatar, level generator, events and creature advance;
//   6. the outcome is evaluated.
// No wall clock is read; every random draw comes from a seeded per-subsystem
// stream.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "affectloop/av_core.hpp"
#include "affectloop/clears.hpp"
#include "affectloop/error.hpp"
#include "affectloop/gameplay.hpp"
#include "affectloop/glados.hpp"
#include "affectloop/piers.hpp"
#include "affectloop/random.hpp"
#include "affectloop/text.hpp"
#include "affectloop/worldgen.hpp"

namespace affectloop::sim {

using glados::EventKind;
using glados::EventRecord;

// Response kernel: a step of (arousal, valence) at event time + latency,
// decaying exponentially with time constant tau.
struct Kernel {
  double arousal = 0.0;
  double valence = 0.0;
  double latency = 1.5;
  double tau = 6.0;
};

enum class Policy : std::uint8_t { Explorer, ObjectiveSeeker, Fleer };

inline std::string_view to_string(Policy p) {
  switch (p) {
  case Policy::Explorer: return "explorer";
  case Policy::ObjectiveSeeker: return "objective";
  case Policy::Fleer: return "fleer";
  }
  return "?";
}

inline std::optional<Policy> policy_from_string(std::string_view s) {
  if (s == "explorer") return Policy::Explorer;
  if (s == "objective") return Policy::ObjectiveSeeker;
  if (s == "fleer") return Policy::Fleer;
  return std::nullopt;
}

// Linear channel responses used to synthesise the calibration phases:
// channel = offset + gain * (arousal or valence).
struct ChannelMap {
  double sc_offset = 2.0, sc_gain = 1.0;
  double hr_offset = 60.0, hr_gain = 4.0;
  double zyg_offset = 0.05, zyg_gain = 0.09;
  double corr_offset = 0.95, corr_gain = -0.09;
};

struct SyntheticPlayerModel {
  EmotionalState neutral{kScaleNeutral, kScaleNeutral};
  Kernel creature{3.0, -1.5, 1.5, 8.0};
  Kernel environmental{1.5, -0.5, 1.5, 6.0};
  Kernel folder{0.5, 1.5, 1.5, 6.0};
  double noise_sigma = 0.1;         // AV units, on the intended state
  double channel_noise = 0.1;       // AV units, independently per channel
  double calibration_noise = 0.0;   // AV units, on calibration self-reports
  Policy policy = Policy::Explorer;
  ChannelMap channels;
  std::array<EmotionalState, 4> calibration_reports{
      EmotionalState{2.0, 7.0}, EmotionalState{8.0, 3.0}, EmotionalState{5.0, 8.5}, EmotionalState{7.5, 2.0}};
};

struct ScenarioConfig {
  std::uint64_t seed = 0;
  clears::Condition condition = clears::Condition::NBF;
  double duration = 300.0;
  double tick_period = 0.1;

  int piers_window_ticks = 10;
  int piers_smoothing = piers::kDefaultSmoothingWindow;

  worldgen::TypeWeights block_weights = worldgen::default_weights();
  gameplay::MovementConfig movement;
  gameplay::CreatureConfig creature;
  gameplay::DetailConfig details;
  int detail_slots = 2;
  std::array<double, gameplay::kEnvEventKindCount> event_probability{0.35, 0.35, 0.35, 0.35, 0.35, 0.35};

  clears::ClearsConfig clears;
  clears::NeutralBaseline baseline;

  double blackout = 2.5;
  double faint_creature_probability = 0.5;
  // No new creature for this long after one despawns.
  double creature_cooldown = 10.0;

  SyntheticPlayerModel player;

  void validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
    if (!(tick_period > 0.0) || !std::isfinite(tick_period)) throw ConfigError("tick_period must be positive");
    if (piers_window_ticks < 1) throw ConfigError("piers.window_ticks must be positive");
    if (piers_smoothing < 1) throw ConfigError("piers.smoothing_window must be positive");
    for (double w : block_weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("block weights must be non-negative");
    if (block_weights[worldgen::index_of(worldgen::BlockType::Straight)] <= 0.0)
      throw ConfigError("the straight tunnel weight must stay positive");
    for (double p : event_probability)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("event probabilities must lie in [0,1]");
    if (detail_slots < 0) throw ConfigError("detail slots must be non-negative");
    if (!(clears.min_factor > 0.0) || clears.min_factor > clears.max_factor)
      throw ConfigError("clears factor bounds are invalid");
    if (baseline.arousal0 < kScaleMin || baseline.arousal0 > kScaleMax || baseline.valence0 < kScaleMin ||
        baseline.valence0 > kScaleMax)
      throw ConfigError("baseline must lie on the AV scale");
    if (movement.base_speed <= 0.0 || movement.stamina_duration <= 0.0 || movement.stamina_regen_time <= 0.0)
      throw ConfigError("movement parameters must be positive");
    if (blackout < 0.0) throw ConfigError("blackout must be non-negative");
    if (creature_cooldown < 0.0) throw ConfigError("creature cooldown must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Synthetic player

inline const Kernel* kernel_for(const SyntheticPlayerModel& m, EventKind kind) {
  switch (kind) {
  case EventKind::CreatureSpawn:
  case EventKind::CreatureChaseStart: return &m.creature;
  case EventKind::EnvEvent: return &m.environmental;
  case EventKind::FolderPickup: return &m.folder;
  default: return nullptr;
  }
}

// Noise-free superposition of decayed impulses; not clamped.
inline std::pair<double, double> synth_av_raw(const SyntheticPlayerModel& m, std::span<const EventRecord> events,
                                              double t) {
  double a = m.neutral.arousal();
  double v = m.neutral.valence();
  for (const auto& e : events) {
    const Kernel* k = kernel_for(m, e.kind);
    if (!k) continue;
    const double onset = e.timestamp + k->latency;
    if (t < onset) continue;
    const double decay = std::exp(-(t - onset) / k->tau);
    a += k->arousal * decay;
    v += k->valence * decay;
  }
  return {a, v};
}

inline EmotionalState synth_av(const SyntheticPlayerModel& m, std::span<const EventRecord> events, double t) {
  auto [a, v] = synth_av_raw(m, events, t);
  return {a, v};
}

inline EmotionalState synth_av(const SyntheticPlayerModel& m, std::span<const EventRecord> events, double t, Rng& noise) {
  auto [a, v] = synth_av_raw(m, events, t);
  a += noise.normal(0.0, m.noise_sigma);
  v += noise.normal(0.0, m.noise_sigma);
  return {a, v};
}

inline double channel_from_state(const ChannelMap& c, Channel ch, const EmotionalState& es) {
  switch (ch) {
  case Channel::SC: return c.sc_offset + c.sc_gain * es.arousal();
  case Channel::HR: return c.hr_offset + c.hr_gain * es.arousal();
  case Channel::EmgZyg: return c.zyg_offset + c.zyg_gain * es.valence();
  case Channel::EmgCorr: return c.corr_offset + c.corr_gain * es.valence();
  }
  return 0.0;
}

// Mean features of the four calibration phases as the synthetic player would
// produce them.
inline std::vector<piers::CalibrationRecord> synthetic_calibration(const SyntheticPlayerModel& m, Rng& noise) {
  std::vector<piers::CalibrationRecord> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const EmotionalState report = m.calibration_reports[i];
    const EmotionalState felt{report.arousal() + noise.normal(0.0, m.calibration_noise),
                              report.valence() + noise.normal(0.0, m.calibration_noise)};
    piers::CalibrationRecord r;
    r.phase = piers::kAllPhases[i];
    r.self_report = report;
    for (Channel c : kAllChannels) r.features.set_channel(c, channel_from_state(m.channels, c, felt));
    r.features.sc = std::max(0.0, r.features.sc);
    r.features.hr = std::max(1.0, r.features.hr);
    r.features.emg_zyg = std::clamp(r.features.emg_zyg, 0.0, 1.0);
    r.features.emg_corr = std::clamp(r.features.emg_corr, 0.0, 1.0);
    out.push_back(r);
  }
  return out;
}

// Channel values a fitted model maps back onto `intended`; each channel sees
// its own noise. Degenerate channels emit the value their flat line implies
// nothing about, so they fall back to zero-information output.
inline PhysiologicalSample emit_sample(const piers::PiersModel& model, const EmotionalState& intended, double t,
                                       double channel_noise, Rng& noise) {
  PhysiologicalSample s;
  s.timestamp = t;
  for (Channel c : kAllChannels) {
    const auto& m = model.model(c);
    const double target = clamp_to_scale(intended.get(m.target) + noise.normal(0.0, channel_noise));
    s.set_channel(c, m.degenerate ? 0.0 : m.invert(target));
  }
  s.sc = std::max(0.0, s.sc);
  s.hr = std::max(1.0, s.hr);
  s.emg_zyg = std::clamp(s.emg_zyg, 0.0, 1.0);
  s.emg_corr = std::clamp(s.emg_corr, 0.0, 1.0);
  return s;
}

// ---------------------------------------------------------------------------
// Session record

struct TimedDirective {
  double t = 0.0;
  clears::Directive directive;
};

struct SessionRecord {
  ScenarioConfig config;
  std::vector<EventRecord> events;
  AvTrace av;                                // PIERS output, one sample per tick
  std::vector<TimedState> intended;          // synthetic player's intended state
  std::vector<PhysiologicalSample> physio;
  std::vector<TimedDirective> directives;    // effective directive changes
  std::vector<glados::GladosState> glados_states; // state after each tick's apply
  std::vector<worldgen::PlacementEvent> placements;
  piers::PiersModel piers_model;
  gameplay::Outcome outcome = gameplay::Outcome::Ongoing;
  double end_time = 0.0;
  std::uint64_t ticks = 0;
  // Per-tick FSM transitions, for auditing the creature machine.
  std::vector<std::pair<gameplay::FsmState, gameplay::FsmState>> fsm_transitions;
  std::vector<gameplay::Hostility> hostility_trace;
  std::vector<int> sanity_trace;
  std::vector<double> stamina_trace;

  std::size_t count(EventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const EventRecord& e) { return e.kind == k; }));
  }
};

// ---------------------------------------------------------------------------
// Session loop

class Session {
public:
  explicit Session(ScenarioConfig cfg)
      : cfg_(std::move(cfg)), level_((cfg_.validate(), cfg_.seed), cfg_.block_weights),
        events_rng_(cfg_.seed, Stream::Events), creature_rng_(cfg_.seed, Stream::Creature),
        player_rng_(cfg_.seed, Stream::Player), noise_rng_(cfg_.seed, Stream::Noise),
        classifier_(make_model()) {
    rec_.config = cfg_;
    rec_.piers_model = classifier_.model();
    for (std::size_t i = 0; i < gameplay::kEnvEventKindCount; ++i)
      triggers_[i] = gameplay::EventTrigger::make(gameplay::kAllEnvEventKinds[i], cfg_.event_probability[i]);
    const auto& start = level_.world().block(level_.sphere().current_block);
    avatar_.block = start.id;
    avatar_.position = worldgen::centre_of(start.cell);
    visited_.insert(start.cell);
    rec_.placements = level_.log();
  }

  SessionRecord run() && {
    const auto max_ticks = static_cast<std::uint64_t>(std::ceil(cfg_.duration / cfg_.tick_period - 1e-9));
    std::vector<TimedState> av;
    for (std::uint64_t tick = 0; tick < max_ticks; ++tick) {
      tick_ = tick;
      now_ = text::round_millis(static_cast<double>(tick) * cfg_.tick_period);
      step();
      av.push_back({now_, current_es_});
      rec_.ticks = tick + 1;
      if (outcome_ != gameplay::Outcome::Ongoing) break;
    }
    rec_.av = AvTrace(std::move(av), cfg_.tick_period);
    rec_.events = log_.records();
    rec_.placements = level_.log();
    rec_.outcome = outcome_;
    rec_.end_time = now_;
    return std::move(rec_);
  }

private:
  piers::PiersModel make_model() {
    Rng calib(cfg_.seed ^ 0xCA11B7A7E5EEDULL, Stream::Noise);
    const auto records = synthetic_calibration(cfg_.player, calib);
    return piers::fit_calibration(records, cfg_.piers_smoothing);
  }

  void log(EventRecord r) { log_.log_event(std::move(r)); }

  static std::string id_str(worldgen::BlockId id) { return std::to_string(id); }

  void step() {
    // 1. synthetic player
    const EmotionalState intended = synth_av(cfg_.player, log_.records(), now_, noise_rng_);
    rec_.intended.push_back({now_, intended});
    const auto sample = emit_sample(classifier_.model(), intended, now_, cfg_.player.channel_noise, noise_rng_);
    rec_.physio.push_back(sample);

    // 2. classification over the trailing window
    const std::size_t n = rec_.physio.size();
    const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(cfg_.piers_window_ticks));
    current_es_ = classifier_.classify(std::span<const PhysiologicalSample>(rec_.physio).subspan(n - w, w));

    // 3-4. decide and apply
    const bool chasing = creature_.spawned && creature_.fsm == gameplay::FsmState::Chasing;
    const auto directives =
        clears::decide(cfg_.condition, current_es_, {avatar_.folders, chasing}, cfg_.baseline, cfg_.clears);
    auto applied = glados::apply_directives(directives, gstate_);
    gstate_ = applied.state;
    for (auto& d : applied.effective) rec_.directives.push_back({now_, std::move(d)});
    if (gstate_.faint_pending) {
      gstate_.faint_pending = false;
      begin_faint();
    }
    rec_.glados_states.push_back(gstate_);

    // 5. world
    advance_avatar();
    if (outcome_ == gameplay::Outcome::Ongoing) advance_creature();

    avatar_.fear_intensity = std::max(0.0, avatar_.fear_intensity - cfg_.tick_period / 2.0);
    rec_.hostility_trace.push_back(creature_.hostility);
    rec_.sanity_trace.push_back(avatar_.sanity);
    rec_.stamina_trace.push_back(avatar_.stamina);

    // 6. outcome
    if (outcome_ == gameplay::Outcome::Ongoing) {
      outcome_ = gameplay::check_outcome(avatar_, level_.world(), killed_);
      if (outcome_ == gameplay::Outcome::Win) log(glados::make_event(now_, EventKind::Win));
    }
  }

  void begin_faint() {
    if (avatar_.fainted) return;
    avatar_.fainted = true;
    avatar_.faint_remaining = cfg_.blackout;
    log(glados::make_event(now_, EventKind::Faint, {{"blackout", text::format_seconds(cfg_.blackout)}}));
    // The creature may have found the player during the blackout.
    const double draw = creature_rng_.uniform();
    if (!creature_.spawned && draw < cfg_.faint_creature_probability) {
      const auto& b = level_.world().block(avatar_.block);
      if (gameplay::has_creature_anchors(b.type) && !b.anchors.empty()) {
        const int anchor = gameplay::best_creature_anchor(b, avatar_.position);
        spawn_creature({b.id, anchor, gameplay::creature_anchor_position(b, anchor)}, "faint");
      }
    }
  }

  void raise_sanity(gameplay::SanityTrigger trigger) {
    const int before = avatar_.sanity;
    avatar_ = gameplay::update_sanity(avatar_, trigger);
    if (avatar_.sanity != before)
      log(glados::make_event(now_, EventKind::SanityLevelUp, {{"level", std::to_string(avatar_.sanity)}}));
  }

  void feel(gameplay::FearSource source, bool chasing_and_looking = false) {
    const auto fear = gameplay::fear_intensity(source, chasing_and_looking);
    avatar_.fear_intensity = std::max(avatar_.fear_intensity, fear.intensity);
    avatar_.camera_shake = fear.shake;
  }

  void spawn_creature(const gameplay::CreaturePlacement& p, const char* cause) {
    gameplay::place_creature(creature_, p);
    log(glados::make_event(now_, EventKind::CreatureSpawn,
                           {{"block", id_str(p.block)},
                            {"hostility", std::string(gameplay::to_string(creature_.hostility))},
                            {"cause", cause}}));
    raise_sanity(gameplay::SanityTrigger::CreatureAppearance);
    feel(gameplay::FearSource::Creature);
  }

  bool chased() const { return creature_.spawned && creature_.fsm == gameplay::FsmState::Chasing; }

  bool folder_here() const {
    const auto& b = level_.world().block(avatar_.block);
    if (b.type == worldgen::BlockType::KeyRoom1) return !folder_taken_[0];
    if (b.type == worldgen::BlockType::KeyRoom2) return !folder_taken_[1];
    return false;
  }

  bool is_objective(const worldgen::Block& b) const {
    if (avatar_.folders >= gameplay::kMaxFolders) return b.type == worldgen::BlockType::ExitRoom;
    if (b.type == worldgen::BlockType::KeyRoom1) return !folder_taken_[0];
    if (b.type == worldgen::BlockType::KeyRoom2) return !folder_taken_[1];
    return false;
  }

  // Next block to walk to, chosen when standing at a block centre.
  std::optional<worldgen::BlockId> choose_target() {
    const auto& world = level_.world();
    const auto& here = world.block(avatar_.block);
    const auto links = here.linked();
    if (links.empty()) return std::nullopt;

    if (cfg_.player.policy != Policy::Explorer) {
      for (auto id : links)
        if (is_objective(world.block(id))) return id;
    }
    if (chased()) {
      const double threat = worldgen::distance(avatar_.position, creature_.position);
      for (auto id : links)
        if (world.block(id).type == worldgen::BlockType::EvasionTunnel &&
            worldgen::distance(worldgen::centre_of(world.block(id).cell), creature_.position) > threat)
          return id;
      {
        worldgen::BlockId best = links.front();
        double best_d = -1.0;
        for (auto id : links) {
          const double d = worldgen::distance(worldgen::centre_of(world.block(id).cell), creature_.position);
          if (d > best_d) {
            best_d = d;
            best = id;
          }
        }
        return best;
      }
    }
    // Random walk biased toward cells not yet visited; avoid doubling back
    // when there is a choice.
    std::vector<double> weights;
    for (auto id : links) {
      const auto& b = world.block(id);
      double w = visited_.count(b.cell) ? 1.0 : 3.0;
      if (previous_block_ && id == *previous_block_ && links.size() > 1) w *= 0.2;
      weights.push_back(w);
    }
    return links[player_rng_.weighted_index(weights)];
  }

  void advance_avatar() {
    const double dt = cfg_.tick_period;
    // Fill whatever the active block still has open before deciding where to go.
    on_level_step(level_.step(avatar_.position, glados::effective_weights(cfg_.block_weights, gstate_), tick_));
    if (avatar_.fainted) {
      avatar_ = gameplay::update_avatar(avatar_, gameplay::Action::Walk, dt, cfg_.movement);
      avatar_.faint_remaining -= dt;
      if (avatar_.faint_remaining <= 1e-9) {
        avatar_.fainted = false;
        avatar_.faint_remaining = 0.0;
      }
      return;
    }
    const gameplay::MovementModifiers mods{gstate_.sprint_speed_mult, gstate_.sprint_duration_mult};
    const auto& world = level_.world();
    const worldgen::Vec2 here_centre = worldgen::centre_of(world.block(avatar_.block).cell);
    const bool at_centre = worldgen::distance(avatar_.position, here_centre) < 1e-9;

    if (target_ && !world.contains(*target_)) target_.reset();
    // Turn back rather than run into the creature.
    if (chased() && target_ && *target_ != avatar_.block) {
      const worldgen::Vec2 goal = worldgen::centre_of(world.block(*target_).cell);
      if (worldgen::distance(goal, creature_.position) < worldgen::distance(avatar_.position, creature_.position))
        target_ = avatar_.block;
    }

    if (at_centre) {
      if (folder_here()) {
        const int before = avatar_.folders;
        avatar_ = gameplay::update_avatar(avatar_, gameplay::Action::Interact, dt, cfg_.movement, mods, true);
        if (avatar_.folders > before) {
          const int which = world.block(avatar_.block).type == worldgen::BlockType::KeyRoom1 ? 0 : 1;
          folder_taken_[static_cast<std::size_t>(which)] = true;
          log(glados::make_event(now_, EventKind::FolderPickup,
                                 {{"folder", std::to_string(which + 1)}, {"count", std::to_string(avatar_.folders)}}));
        }
        return;
      }
      if (chased() && world.block(avatar_.block).type == worldgen::BlockType::EvasionTunnel) {
        avatar_ = gameplay::update_avatar(avatar_, gameplay::Action::Crouch, dt, cfg_.movement, mods);
        return;
      }
      if (!target_ || *target_ == avatar_.block) target_ = choose_target();
    }
    if (!target_) {
      avatar_ = gameplay::update_avatar(avatar_, gameplay::Action::Walk, dt, cfg_.movement, mods);
      return;
    }

    const bool sprint = chased();
    avatar_ = gameplay::update_avatar(avatar_, sprint ? gameplay::Action::Sprint : gameplay::Action::Walk, dt,
                                      cfg_.movement, mods);
    // Leftover movement after reaching a centre carries on toward the next
    // target, unless the centre is somewhere to stop.
    double budget = avatar_.speed * dt;
    while (target_ && budget > 1e-12 && outcome_ == gameplay::Outcome::Ongoing) {
      const worldgen::Vec2 goal = worldgen::centre_of(level_.world().block(*target_).cell);
      const double step_len = std::min(budget, worldgen::distance(avatar_.position, goal));
      avatar_.position = gameplay::detail::move_toward(avatar_.position, goal, step_len);
      budget -= step_len;
      const worldgen::BlockId before = avatar_.block;
      on_level_step(level_.step(avatar_.position, glados::effective_weights(cfg_.block_weights, gstate_), tick_));
      if (level_.sphere().current_block != before) {
        previous_block_ = before;
        avatar_.block = level_.sphere().current_block;
        visited_.insert(level_.world().block(avatar_.block).cell);
        on_enter_block(avatar_.block);
      }
      if (avatar_.position != goal) continue;
      target_.reset();
      if (folder_here()) break;
      if (chased() && level_.world().block(avatar_.block).type == worldgen::BlockType::EvasionTunnel) break;
      target_ = choose_target();
    }
  }

  void on_level_step(const worldgen::StepResult& res) {
    for (const auto& gone : res.despawned) {
      block_triggers_.erase(gone.id);
      if (creature_.spawned && creature_.block == gone.id) {
        creature_.spawned = false;
        creature_ready_at_ = now_ + cfg_.creature_cooldown;
        creature_.retreat_target.reset();
      }
    }
    for (auto id : res.spawned) {
      const auto& b = level_.world().block(id);
      detail_delays_.on_block_spawned();
      for (int s = 0; s < cfg_.detail_slots; ++s) gameplay::select_detail(events_rng_, detail_delays_, cfg_.details);
      for (auto& t : triggers_) t.on_block_spawned();
      if (b.type != worldgen::BlockType::ExitRoom && !worldgen::is_key_room(b.type))
        block_triggers_[id] = gameplay::kAllEnvEventKinds[events_rng_.below(gameplay::kEnvEventKindCount)];
      log(glados::make_event(now_, EventKind::BlockSpawn,
                             {{"block", id_str(id)}, {"type", std::string(worldgen::to_string(b.type))}}));
      if (!creature_.spawned) {
        // The roll is made even during the cooldown so paired runs draw alike.
        auto p = gameplay::maybe_spawn_creature(b, level_.world(), avatar_.position, creature_rng_, cfg_.creature,
                                                gstate_.creature_scale);
        if (p && now_ >= creature_ready_at_) spawn_creature(*p, "block");
      }
    }
  }

  void on_enter_block(worldgen::BlockId id) {
    auto it = block_triggers_.find(id);
    if (it == block_triggers_.end()) return;
    const auto kind = it->second;
    block_triggers_.erase(it); // a tripwire is stepped on once
    auto& trig = triggers_[static_cast<std::size_t>(kind)];
    if (auto occ = gameplay::try_trigger(trig, events_rng_, gstate_.env_scale)) {
      log(glados::make_env_event(now_, occ->kind, {{"block", id_str(id)}}));
      raise_sanity(gameplay::SanityTrigger::EnvironmentalEvent);
      feel(gameplay::FearSource::Environmental);
    }
  }

  void update_hostility() {
    creature_.hostility = gameplay::update_hostility(
        creature_.hostility, {avatar_.folders, level_.world().total_spawned(), creature_.retreat_count});
  }

  void advance_creature() {
    update_hostility();
    if (!creature_.spawned) {
      rec_.fsm_transitions.push_back({creature_.fsm, creature_.fsm});
      return;
    }
    const auto& world = level_.world();
    const bool in_tunnel = world.block(avatar_.block).type == worldgen::BlockType::EvasionTunnel;
    const gameplay::AvatarView view{avatar_.position, avatar_.block,
                                    avatar_.movement_mode == gameplay::MovementMode::Crouch, in_tunnel};
    const auto r = gameplay::step_fsm(creature_, view, world, creature_rng_, cfg_.creature, cfg_.tick_period);
    rec_.fsm_transitions.push_back({r.from, r.to});
    if (r.despawn) creature_ready_at_ = now_ + cfg_.creature_cooldown;
    if (r.chase_started) {
      log(glados::make_event(now_, EventKind::CreatureChaseStart, {{"block", id_str(creature_.block)}}));
      feel(gameplay::FearSource::Creature, true);
    }
    if (r.retreat_increment || (r.to == gameplay::FsmState::Retreat && r.from != r.to))
      log(glados::make_event(now_, EventKind::CreatureRetreat,
                             {{"count", std::to_string(creature_.retreat_count)},
                              {"despawn", r.despawn ? "1" : "0"}}));
    if (r.to == gameplay::FsmState::Chasing && !r.kill) {
      const bool looking = worldgen::distance(creature_.position, avatar_.position) <= cfg_.creature.proximity;
      if (looking) feel(gameplay::FearSource::Creature, true);
    }
    if (r.kill) {
      killed_ = true;
      outcome_ = gameplay::Outcome::Lose;
      log(glados::make_event(now_, EventKind::Lose, {{"cause", "creature"}}));
    }
    update_hostility();
  }

  ScenarioConfig cfg_;
  worldgen::LevelGenerator level_;
  Rng events_rng_, creature_rng_, player_rng_, noise_rng_;
  piers::Classifier classifier_;
  glados::EventLog log_;
  glados::GladosState gstate_;
  gameplay::AvatarState avatar_;
  gameplay::CreatureState creature_;
  gameplay::DetailDelays detail_delays_;
  std::array<gameplay::EventTrigger, gameplay::kEnvEventKindCount> triggers_{};
  std::map<worldgen::BlockId, gameplay::EnvEventKind> block_triggers_;
  std::array<bool, 2> folder_taken_{};
  std::set<worldgen::Cell> visited_;
  std::optional<worldgen::BlockId> target_;
  std::optional<worldgen::BlockId> previous_block_;
  EmotionalState current_es_;
  gameplay::Outcome outcome_ = gameplay::Outcome::Ongoing;
  bool killed_ = false;
  double creature_ready_at_ = 0.0;
  std::uint64_t tick_ = 0;
  double now_ = 0.0;
  SessionRecord rec_;
};

inline SessionRecord run(const ScenarioConfig& cfg) { return Session(cfg).run(); }

// ---------------------------------------------------------------------------
// Session directory: events.tsv, av.csv, physio.csv, directives.tsv,
// outcome.txt, placement.log

inline std::string format_av_csv(const AvTrace& av) {
  std::string out = "t,arousal,valence\n";
  for (const auto& s : av.samples())
    out += text::format_seconds(s.t) + ',' + text::format_fixed(s.state.arousal(), 6) + ',' +
           text::format_fixed(s.state.valence(), 6) + '\n';
  return out;
}

inline std::string format_physio_csv(std::span<const PhysiologicalSample> physio) {
  std::string out = "t,sc,hr,emg_zyg,emg_corr\n";
  for (const auto& s : physio)
    out += text::format_seconds(s.timestamp) + ',' + text::format_fixed(s.sc, 6) + ',' + text::format_fixed(s.hr, 6) +
           ',' + text::format_fixed(s.emg_zyg, 6) + ',' + text::format_fixed(s.emg_corr, 6) + '\n';
  return out;
}

inline std::string format_directives_tsv(std::span<const TimedDirective> directives) {
  std::string out;
  for (const auto& d : directives) out += text::format_seconds(d.t) + '\t' + clears::format_directive(d.directive) + '\n';
  return out;
}

inline std::string format_outcome(const SessionRecord& r) {
  return std::string(gameplay::to_string(r.outcome)) + '\n' + "end_time=" + text::format_seconds(r.end_time) + '\n' +
         "ticks=" + std::to_string(r.ticks) + '\n' + "seed=" + std::to_string(r.config.seed) + '\n' +
         "condition=" + std::string(clears::to_string(r.config.condition)) + '\n';
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + p.string());
  f << content;
  if (!f) throw Error("write failed for " + p.string());
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_session(const SessionRecord& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "events.tsv", glados::export_log(std::span<const EventRecord>(r.events)));
  write_file(dir / "av.csv", format_av_csv(r.av));
  write_file(dir / "physio.csv", format_physio_csv(r.physio));
  write_file(dir / "directives.tsv", format_directives_tsv(r.directives));
  write_file(dir / "outcome.txt", format_outcome(r));
  write_file(dir / "placement.log", worldgen::format_placement_log(r.placements));
}

} // namespace affectloop::sim
