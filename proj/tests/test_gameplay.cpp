#include <gtest/gtest.h>

#include "affectloop/gameplay.hpp"

using namespace affectloop;
using namespace affectloop::gameplay;
using worldgen::BlockType;
using worldgen::Direction;

namespace {

// Straight corridor of n blocks running north from (0,0).
worldgen::WorldGraph corridor(int n) {
  worldgen::WorldGraph w;
  std::vector<worldgen::BlockId> ids;
  for (int i = 0; i < n; ++i) ids.push_back(w.insert(BlockType::Straight, {0, i}, 0));
  for (int i = 0; i + 1 < n; ++i) worldgen::WorldGraph::link(w.block(ids[i]), Direction::North, w.block(ids[i + 1]));
  return w;
}

CreatureState spawned_at(worldgen::Vec2 p, worldgen::BlockId b, Hostility h, FsmState s) {
  CreatureState c;
  c.spawned = true;
  c.position = p;
  c.block = b;
  c.hostility = h;
  c.fsm = s;
  return c;
}

} // namespace

TEST(Details, PaperDelayTenBlocks) {
  Rng rng(1);
  DetailDelays d;
  DetailConfig cfg;
  // Only Paper_1 eligible.
  d.remaining.fill(1000);
  d.remaining[0] = 0;
  ASSERT_EQ(select_detail(rng, d, cfg), DetailKind::Paper1);
  for (int i = 0; i < 10; ++i) {
    EXPECT_NE(d.remaining[0], 0);
    d.on_block_spawned();
  }
  EXPECT_EQ(d.remaining[0], 0);
  EXPECT_EQ(cfg.delay_of(DetailKind::Chalk3), 5);
  EXPECT_EQ(cfg.delay_of(DetailKind::Steam), 2);
  EXPECT_EQ(detail_name(DetailKind::Paper7), "Paper_7");
  EXPECT_EQ(detail_name(DetailKind::Chalk1), "Chalk_1");
  EXPECT_EQ(detail_name(DetailKind::WaterSplash), "Env_WaterSplash");
}

TEST(Details, EmptySlotWhenAllDelayed) {
  Rng rng(1);
  DetailDelays d;
  d.remaining.fill(3);
  EXPECT_EQ(select_detail(rng, d, {}), std::nullopt);
}

TEST(Details, ChosenKindNeverRepeatsWithinDelay) {
  Rng rng(4);
  DetailDelays d;
  DetailConfig cfg;
  std::array<int, kDetailKindCount> last;
  last.fill(-1000);
  for (int block = 0; block < 2000; ++block) {
    d.on_block_spawned();
    for (int slot = 0; slot < 2; ++slot) {
      auto k = select_detail(rng, d, cfg);
      if (!k) continue;
      const auto i = static_cast<std::size_t>(*k);
      EXPECT_GE(block - last[i], cfg.delay_of(*k)) << detail_name(*k);
      last[i] = block;
    }
  }
}

TEST(Events, DelaysAndOneShot) {
  EXPECT_EQ(event_delay_blocks(EnvEventKind::Bugs), 20);
  EXPECT_EQ(event_delay_blocks(EnvEventKind::PipeFall), 10);
  auto t = EventTrigger::make(EnvEventKind::Explosion, 1.0);
  Rng rng(3);
  EXPECT_TRUE(try_trigger(t, rng).has_value());
  for (int i = 0; i < 50; ++i) EXPECT_FALSE(try_trigger(t, rng).has_value());
}

TEST(Events, RearmAfterDelay) {
  auto t = EventTrigger::make(EnvEventKind::PipeFall, 1.0);
  Rng rng(3);
  ASSERT_TRUE(try_trigger(t, rng));
  for (int i = 0; i < 9; ++i) {
    t.on_block_spawned();
    EXPECT_FALSE(try_trigger(t, rng));
  }
  t.on_block_spawned();
  EXPECT_TRUE(try_trigger(t, rng));
}

TEST(Events, AlwaysConsumesOneDraw) {
  auto armed = EventTrigger::make(EnvEventKind::Bugs, 0.5);
  auto spent = EventTrigger::make(EnvEventKind::Bugs, 0.5);
  spent.remaining_delay = 5;
  Rng a(11), b(11);
  try_trigger(armed, a);
  try_trigger(spent, b);
  EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(Events, FrequencyMatchesScaledProbability) {
  Rng rng(12);
  int hits = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto t = EventTrigger::make(EnvEventKind::LightBlast, 0.35);
    hits += try_trigger(t, rng, 0.5).has_value();
  }
  EXPECT_NEAR(hits / double(n), 0.175, 0.01);
}

TEST(Hostility, Escalation) {
  EXPECT_EQ(update_hostility(Hostility::Passive, {0, 0, 0}), Hostility::Passive);
  EXPECT_EQ(update_hostility(Hostility::Passive, {1, 0, 0}), Hostility::PassiveAggressive);
  EXPECT_EQ(update_hostility(Hostility::Passive, {2, 0, 0}), Hostility::Aggressive);
  EXPECT_EQ(update_hostility(Hostility::Passive, {0, 30, 0}), Hostility::Aggressive);
  EXPECT_EQ(update_hostility(Hostility::Passive, {0, 29, 0}), Hostility::Passive);
  EXPECT_EQ(update_hostility(Hostility::Passive, {0, 0, 3}), Hostility::Aggressive);
  EXPECT_EQ(update_hostility(Hostility::Aggressive, {0, 0, 0}), Hostility::Aggressive);
}

TEST(Fsm, TransitionTable) {
  EXPECT_TRUE(is_legal_transition(FsmState::Passive, FsmState::Chasing));
  EXPECT_TRUE(is_legal_transition(FsmState::Chasing, FsmState::Retreat));
  EXPECT_TRUE(is_legal_transition(FsmState::Retreat, FsmState::Searching));
  EXPECT_FALSE(is_legal_transition(FsmState::Passive, FsmState::Retreat));
  EXPECT_FALSE(is_legal_transition(FsmState::Chasing, FsmState::Passive));
  EXPECT_FALSE(is_legal_transition(FsmState::Searching, FsmState::Retreat));
}

TEST(Fsm, PassiveRetreatsAndDespawns) {
  auto w = corridor(3);
  auto c = spawned_at({0, 1}, 2, Hostility::Passive, FsmState::Passive);
  Rng rng(1);
  const auto r = step_fsm(c, {{0, 0}, 1, false, false}, w, rng, {}, 0.1);
  EXPECT_TRUE(r.despawn);
  EXPECT_TRUE(r.retreat_increment);
  EXPECT_FALSE(c.spawned);
  EXPECT_EQ(c.retreat_count, 1);
}

TEST(Fsm, PassiveIgnoresFarPlayer) {
  auto w = corridor(5);
  auto c = spawned_at({0, 4}, 5, Hostility::Passive, FsmState::Passive);
  Rng rng(1);
  const auto r = step_fsm(c, {{0, 0}, 1, false, false}, w, rng, {}, 0.1);
  EXPECT_FALSE(r.despawn);
  EXPECT_EQ(c.fsm, FsmState::Passive);
}

TEST(Fsm, AggressiveChasesAndKills) {
  auto w = corridor(3);
  auto c = spawned_at({0, 2}, 3, Hostility::Aggressive, FsmState::Searching);
  Rng rng(1);
  const AvatarView v{{0, 0.5}, 1, false, false};
  auto r = step_fsm(c, v, w, rng, {}, 0.1);
  EXPECT_TRUE(r.chase_started);
  ASSERT_EQ(c.fsm, FsmState::Chasing);
  bool killed = false;
  for (int i = 0; i < 20 && !killed; ++i) killed = step_fsm(c, v, w, rng, {}, 0.1).kill;
  EXPECT_TRUE(killed);
}

TEST(Fsm, CrouchInTunnelForcesRetreat) {
  auto w = corridor(4);
  auto c = spawned_at({0, 2}, 3, Hostility::PassiveAggressive, FsmState::Chasing);
  Rng rng(1);
  const auto r = step_fsm(c, {{0, 1}, 2, true, true}, w, rng, {}, 0.1);
  EXPECT_EQ(r.to, FsmState::Retreat);
  EXPECT_TRUE(r.retreat_increment);
  ASSERT_TRUE(c.retreat_target);
  EXPECT_EQ(*c.retreat_target, (worldgen::Vec2{0, 3}));
  for (int i = 0; i < 20 && c.fsm == FsmState::Retreat; ++i) step_fsm(c, {{0, 1}, 2, true, true}, w, rng, {}, 0.1);
  EXPECT_EQ(c.fsm, FsmState::Passive);
}

TEST(Fsm, EscapeBeyondTwoHopsDespawns) {
  auto w = corridor(6);
  auto c = spawned_at({0, 5}, 6, Hostility::Aggressive, FsmState::Chasing);
  Rng rng(1);
  const auto r = step_fsm(c, {{0, 0}, 1, false, false}, w, rng, {}, 0.1);
  EXPECT_TRUE(r.despawn);
}

TEST(Fsm, RandomisedInvariant) {
  auto w = corridor(6);
  Rng rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto h = static_cast<Hostility>(rng.below(3));
    auto c = spawned_at({0, rng.uniform() * 5}, 1, h, h == Hostility::Aggressive ? FsmState::Searching : FsmState::Passive);
    detail::sync_block(c, w);
    c.retreat_count = static_cast<int>(rng.below(h == Hostility::Aggressive ? 4 : 3));
    for (int s = 0; s < 50 && c.spawned; ++s) {
      const double y = rng.uniform() * 5;
      const AvatarView v{{0, y}, w.block_at(worldgen::cell_of({0, y}))->id, rng.bernoulli(0.5), rng.bernoulli(0.5)};
      const auto r = step_fsm(c, v, w, rng, {}, 0.1);
      // the session escalates hostility after every behaviour step
      c.hostility = update_hostility(c.hostility, {0, 0, c.retreat_count});
      EXPECT_TRUE(is_legal_transition(r.from, r.to));
      EXPECT_TRUE(fsm_invariant_holds(c));
      if (r.kill) break;
    }
  }
}

TEST(Fsm, UnspawnedIsError) {
  auto w = corridor(1);
  CreatureState c;
  Rng rng(1);
  EXPECT_THROW(step_fsm(c, {}, w, rng, {}, 0.1), Error);
}

TEST(CreatureSpawn, ProbabilitySchedule) {
  CreatureConfig cfg;
  EXPECT_DOUBLE_EQ(spawn_probability(cfg, 0), 0.05);
  EXPECT_DOUBLE_EQ(spawn_probability(cfg, 10), 0.1);
  EXPECT_DOUBLE_EQ(spawn_probability(cfg, 1000), 0.5);
}

TEST(CreatureSpawn, NeverInExitRoomAndFarthestAnchor) {
  auto w = worldgen::init_world();
  Rng rng(1);
  CreatureConfig cfg;
  cfg.p0 = 1.0;
  cfg.pmax = 1.0;
  EXPECT_FALSE(maybe_spawn_creature(w.blocks().begin()->second, w, {0, 0}, rng, cfg, 1.0));
  auto c = corridor(1);
  const auto p = maybe_spawn_creature(c.block(1), c, {0, -0.4}, rng, cfg, 1.0);
  ASSERT_TRUE(p);
  EXPECT_EQ(c.block(1).anchors[static_cast<std::size_t>(p->anchor_index)].dir, Direction::North);
  EXPECT_NEAR(p->position.y, 0.35, 1e-12);
}

TEST(Avatar, SprintDrainsAndRegenerates) {
  MovementConfig cfg;
  AvatarState a;
  a = update_avatar(a, Action::Sprint, 1.0, cfg);
  EXPECT_EQ(a.movement_mode, MovementMode::Sprint);
  EXPECT_NEAR(a.speed, cfg.base_speed * cfg.sprint_mult, 1e-12);
  EXPECT_NEAR(a.stamina, 1.0 - 1.0 / 6.0, 1e-12);
  for (int i = 0; i < 10 && a.stamina > 0.0; ++i) a = update_avatar(a, Action::Sprint, 1.0, cfg);
  ASSERT_EQ(a.stamina, 0.0);
  a = update_avatar(a, Action::Sprint, 1.0, cfg);
  EXPECT_EQ(a.movement_mode, MovementMode::Walk);
  EXPECT_NEAR(a.speed, cfg.base_speed, 1e-12);
  a = update_avatar(a, Action::Crouch, 1.0, cfg);
  EXPECT_NEAR(a.speed, cfg.base_speed * cfg.crouch_mult, 1e-12);
}

TEST(Avatar, SprintModifiers) {
  MovementConfig cfg;
  AvatarState a;
  a = update_avatar(a, Action::Sprint, 1.0, cfg, {1.2, 2.0});
  EXPECT_NEAR(a.speed, cfg.base_speed * cfg.sprint_mult * 1.2, 1e-12);
  EXPECT_NEAR(a.stamina, 1.0 - 1.0 / 12.0, 1e-12);
}

TEST(Avatar, FolderCapAndFaint) {
  AvatarState a;
  for (int i = 0; i < 5; ++i) a = update_avatar(a, Action::Interact, 0.1, {}, {}, true);
  EXPECT_EQ(a.folders, kMaxFolders);
  a.fainted = true;
  a = update_avatar(a, Action::Sprint, 0.1, {});
  EXPECT_EQ(a.speed, 0.0);
}

TEST(Sanity, MonotoneAndCapped) {
  AvatarState a;
  EXPECT_EQ(a.sanity, 1);
  a = update_sanity(a, SanityTrigger::EnvironmentalEvent);
  EXPECT_TRUE(a.heavy_breathing);
  EXPECT_FALSE(a.auditory_hallucinations);
  for (int i = 0; i < 10; ++i) a = update_sanity(a, SanityTrigger::CreatureAppearance);
  EXPECT_EQ(a.sanity, kMaxSanity);
  EXPECT_TRUE(a.dizzy_bugs);
}

TEST(Fear, Intensities) {
  EXPECT_DOUBLE_EQ(fear_intensity(FearSource::Environmental, false).intensity, 0.3);
  EXPECT_DOUBLE_EQ(fear_intensity(FearSource::Creature, false).intensity, 0.7);
  const auto f = fear_intensity(FearSource::Creature, true);
  EXPECT_DOUBLE_EQ(f.intensity, 1.0);
  EXPECT_TRUE(f.shake);
}

TEST(Outcome, WinNeedsTwoFoldersInExitRoom) {
  auto w = worldgen::init_world();
  AvatarState a;
  a.block = w.blocks().begin()->first;
  a.folders = 1;
  EXPECT_EQ(check_outcome(a, w, false), Outcome::Ongoing);
  a.folders = 2;
  EXPECT_EQ(check_outcome(a, w, false), Outcome::Win);
  EXPECT_EQ(check_outcome(a, w, true), Outcome::Lose);
}
