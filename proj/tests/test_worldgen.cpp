#include <gtest/gtest.h>

#include <map>

#include "affectloop/worldgen.hpp"
#include "oracles.hpp"

using namespace affectloop;
using namespace affectloop::worldgen;

namespace {

TypeWeights only(BlockType t) {
  TypeWeights w{};
  w[index_of(t)] = 1.0;
  return w;
}

// Random walk over linked neighbours, one cell per step.
LevelGenerator walk(std::uint64_t seed, int steps) {
  LevelGenerator g(seed);
  Rng pick(seed, Stream::Player);
  g.step(centre_of(g.world().block(g.sphere().current_block).cell), 0);
  for (int i = 1; i <= steps; ++i) {
    const auto links = g.world().block(g.sphere().current_block).linked();
    if (links.empty()) break;
    const auto next = links[pick.below(links.size())];
    g.step(centre_of(g.world().block(next).cell), static_cast<std::uint64_t>(i));
  }
  return g;
}

} // namespace

TEST(InitWorld, SingleActiveExitRoom) {
  const auto w = init_world();
  ASSERT_EQ(w.size(), 1u);
  const auto& b = w.blocks().begin()->second;
  EXPECT_EQ(b.type, BlockType::ExitRoom);
  EXPECT_EQ(b.cell, (Cell{0, 0}));
  EXPECT_TRUE(b.active);
  EXPECT_EQ(w.total_spawned(), 1u);
  const auto d = initial_delays();
  EXPECT_EQ(d.get(BlockType::DeadEnd), 4);
  EXPECT_FALSE(can_spawn(BlockType::DeadEnd, w, d));
  EXPECT_EQ(init_world(), init_world());
}

TEST(Anchors, CountsByType) {
  const std::map<BlockType, std::size_t> expected{
      {BlockType::Straight, 2}, {BlockType::EvasionTunnel, 2}, {BlockType::Corner, 2}, {BlockType::ThreeWay, 3},
      {BlockType::FourWay, 4},  {BlockType::KeyRoom1, 4},      {BlockType::KeyRoom2, 4}, {BlockType::ExitRoom, 1},
      {BlockType::DeadEnd, 1}};
  for (auto [t, n] : expected) EXPECT_EQ(base_anchors(t).size(), n) << to_string(t);
  EXPECT_EQ(std::size(kAllBlockTypes), 9u);
}

TEST(CanSpawn, TableFourRules) {
  DelayTable zero;
  WorldGraph w;
  w.insert(BlockType::DeadEnd, {0, 0}, 0);
  EXPECT_FALSE(can_spawn(BlockType::DeadEnd, w, zero));
  WorldGraph x = init_world();
  EXPECT_FALSE(can_spawn(BlockType::KeyRoom1, x, zero));
  EXPECT_FALSE(can_spawn(BlockType::KeyRoom2, x, zero));
  EXPECT_FALSE(can_spawn(BlockType::ExitRoom, x, zero));
  EXPECT_TRUE(can_spawn(BlockType::Straight, x, zero));
  WorldGraph k;
  k.insert(BlockType::KeyRoom2, {0, 0}, 0);
  EXPECT_FALSE(can_spawn(BlockType::KeyRoom1, k, zero));
  EXPECT_TRUE(can_spawn(BlockType::ExitRoom, k, zero));
  WorldGraph empty;
  EXPECT_TRUE(can_spawn(BlockType::KeyRoom1, empty, zero));
}

TEST(Delays, ExitRoomNeedsTenBlocksAfterDespawn) {
  DelayTable d;
  d.on_despawn(BlockType::ExitRoom);
  for (int i = 0; i < 9; ++i) {
    d.on_spawn(BlockType::Straight);
    EXPECT_FALSE(d.ready(BlockType::ExitRoom)) << i;
  }
  d.on_spawn(BlockType::Straight);
  EXPECT_TRUE(d.ready(BlockType::ExitRoom));
}

TEST(Delays, KeyRoomNeedsSixBlocksAfterSpawn) {
  DelayTable d;
  d.on_spawn(BlockType::KeyRoom1);
  for (int i = 0; i < 5; ++i) {
    d.on_spawn(BlockType::Corner);
    EXPECT_FALSE(d.ready(BlockType::KeyRoom1));
  }
  d.on_spawn(BlockType::Corner);
  EXPECT_TRUE(d.ready(BlockType::KeyRoom1));
  EXPECT_TRUE(d.ready(BlockType::KeyRoom2));
}

TEST(SelectBlockType, DegenerateWeights) {
  Rng rng(5);
  const auto w = init_world();
  DelayTable zero;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(select_block_type(rng, w, zero, only(BlockType::Straight)), BlockType::Straight);
}

TEST(SelectBlockType, RulesDominateWeights) {
  Rng rng(6);
  const auto w = init_world();
  DelayTable zero;
  TypeWeights wt{};
  wt[index_of(BlockType::KeyRoom1)] = 1e9;
  wt[index_of(BlockType::Straight)] = 1.0;
  for (int i = 0; i < 1000; ++i) EXPECT_NE(select_block_type(rng, w, zero, wt), BlockType::KeyRoom1);
}

TEST(SelectBlockType, NoEligibleTypeIsGenerationError) {
  Rng rng(1);
  const auto w = init_world();
  EXPECT_THROW(select_block_type(rng, w, DelayTable{}, only(BlockType::ExitRoom)), GenerationError);
}

TEST(SelectBlockType, ThreeToOneChiSquare) {
  Rng rng(2024);
  const auto w = init_world();
  DelayTable zero;
  TypeWeights wt{};
  wt[index_of(BlockType::Straight)] = 3.0;
  wt[index_of(BlockType::Corner)] = 1.0;
  const int n = 10000;
  int straight = 0;
  for (int i = 0; i < n; ++i) straight += select_block_type(rng, w, zero, wt) == BlockType::Straight;
  const double e1 = 0.75 * n, e2 = 0.25 * n;
  const double chi = (straight - e1) * (straight - e1) / e1 + ((n - straight) - e2) * ((n - straight) - e2) / e2;
  EXPECT_GT(oracle::chi_square_sf(chi, 1), 0.001);
  EXPECT_NEAR(static_cast<double>(straight) / (n - straight), 3.0, 0.15);
}

TEST(StepSphere, ThreeWayWithTwoOpenAnchorsSpawnsTwo) {
  WorldGraph w;
  const auto exit = w.insert(BlockType::ExitRoom, {0, 0}, 0); // end faces south
  const auto tee = w.insert(BlockType::ThreeWay, {0, -1}, 0); // ends N, E, W
  WorldGraph::link(w.block(exit), Direction::South, w.block(tee));
  w.block(exit).active = true;
  DelayTable delays;
  SpawningSphere sphere{centre_of({0, 0}), 1.5, exit};
  Rng rng(9);
  const auto r = step_sphere(w, delays, sphere, rng, default_weights());
  EXPECT_EQ(r.entered, std::nullopt);
  EXPECT_TRUE(r.spawned.empty());
  sphere.centre = centre_of({0, -1});
  const auto r2 = step_sphere(w, delays, sphere, rng, default_weights());
  EXPECT_EQ(r2.entered, tee);
  EXPECT_EQ(r2.spawned.size(), 2u);
  EXPECT_TRUE(w.block(tee).active);
  EXPECT_FALSE(w.contains(exit) && w.block(exit).active);
  for (const auto& a : w.block(tee).anchors) EXPECT_TRUE(a.link.has_value());
}

TEST(StepSphere, RejectsJumpToUnlinkedCell) {
  LevelGenerator g(1);
  EXPECT_THROW(g.step({5.0, 5.0}, 1), GenerationError);
}

TEST(StepSphere, CurrentBlockNeverDespawned) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    LevelGenerator g(seed);
    Rng pick(seed, Stream::Player);
    g.step(centre_of(g.world().block(g.sphere().current_block).cell), 0);
    for (int i = 1; i <= 100; ++i) {
      const auto links = g.world().block(g.sphere().current_block).linked();
      ASSERT_FALSE(links.empty());
      const auto next = links[pick.below(links.size())];
      const auto res = g.step(centre_of(g.world().block(next).cell), static_cast<std::uint64_t>(i));
      for (const auto& gone : res.despawned) EXPECT_NE(gone.id, g.sphere().current_block);
      ASSERT_TRUE(g.world().contains(g.sphere().current_block));
    }
  }
}

TEST(StepSphere, WorldInvariantsHoldAlongWalks) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = walk(seed, 200);
    const auto& w = g.world();
    // mutual links, joined cells adjacent
    for (const auto& [id, b] : w.blocks()) {
      for (const auto& a : b.anchors) {
        if (!a.link) continue;
        ASSERT_TRUE(w.contains(*a.link));
        const auto& o = w.block(*a.link);
        EXPECT_EQ(o.cell, neighbour(b.cell, a.dir));
        const auto* back = o.anchor_toward(opposite(a.dir));
        ASSERT_NE(back, nullptr);
        EXPECT_EQ(back->link, id);
      }
    }
    EXPECT_LE(w.count(BlockType::DeadEnd), 1u);
    EXPECT_LE(w.count(BlockType::ExitRoom), 1u);
    EXPECT_LE(w.count(BlockType::KeyRoom1) + w.count(BlockType::KeyRoom2), 1u);
    // active block has no open anchor
    for (const auto& a : w.block(g.sphere().current_block).anchors) EXPECT_TRUE(a.link.has_value());
  }
}

TEST(StepSphere, PlacementLogOracleAgreesOnWalks) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto g = walk(seed, 200);
    const auto rep = oracle::replay_placements(format_placement_log(g.log()));
    EXPECT_TRUE(rep.clean()) << "seed " << seed << ": " << (rep.messages.empty() ? "" : rep.messages.front());
    EXPECT_GT(rep.spawns, 1u);
  }
}

TEST(StepSphere, Deterministic) {
  const auto a = walk(77, 150);
  const auto b = walk(77, 150);
  EXPECT_EQ(a.world(), b.world());
  EXPECT_EQ(format_placement_log(a.log()), format_placement_log(b.log()));
  const auto c = walk(78, 150);
  EXPECT_NE(format_placement_log(a.log()), format_placement_log(c.log()));
}

TEST(PlacementLog, RoundTrip) {
  const auto g = walk(3, 40);
  const auto text = format_placement_log(g.log());
  EXPECT_EQ(format_placement_log(parse_placement_log(text)), text);
}

TEST(PlacementOracle, DetectsPlantedViolations) {
  // overlap
  auto r1 = oracle::replay_placements("0,spawn,1,ExitRoom,0,0,0\n1,spawn,2,Straight,0,-1,0\n1,spawn,3,Corner,0,-1,0\n");
  EXPECT_GT(r1.overlaps, 0u);
  // key room while the exit room stands
  auto r2 = oracle::replay_placements("0,spawn,1,ExitRoom,0,0,0\n1,spawn,2,KeyRoom1,0,-1,0\n");
  EXPECT_GT(r2.rule_violations, 0u);
  // dead end among the first four blocks
  auto r3 = oracle::replay_placements("0,spawn,1,ExitRoom,0,0,0\n1,spawn,2,DeadEnd,0,-1,0\n");
  EXPECT_GT(r3.delay_violations, 0u);
  // mismatched edge: a corner turned away from the exit room
  auto r4 = oracle::replay_placements("0,spawn,1,ExitRoom,0,0,0\n1,spawn,2,Corner,0,-1,90\n");
  EXPECT_GT(r4.fit_violations, 0u);
}
