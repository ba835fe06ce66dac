#pragma once

// Procedural block-graph level generation.
//
// Blocks live on a unit grid, one cell each, rotated in quarter turns. Every
// block end carries an anchor; linked anchors are mutual and always join
// edge-adjacent cells. A spawning sphere follows the player: when its centre
// enters a block's cell the block becomes active and new blocks are spawned on
// its open anchors; when it leaves, the block goes inactive and its other
// neighbours are removed.
//
// Placement keeps one local invariant: an open (unlinked) anchor always faces
// a free cell. A candidate placement at cell C is accepted only if it links
// every neighbour anchor facing C and exposes no anchor toward a neighbour that
// has no matching end.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affectloop/error.hpp"
#include "affectloop/random.hpp"
#include "affectloop/text.hpp"

namespace affectloop::worldgen {

enum class BlockType : std::uint8_t {
  Straight,
  Corner,
  ThreeWay,
  FourWay,
  DeadEnd,
  KeyRoom1,
  KeyRoom2,
  ExitRoom,
  EvasionTunnel,
};

inline constexpr std::size_t kBlockTypeCount = 9;

inline constexpr BlockType kAllBlockTypes[kBlockTypeCount] = {
    BlockType::Straight, BlockType::Corner,   BlockType::ThreeWay, BlockType::FourWay,      BlockType::DeadEnd,
    BlockType::KeyRoom1, BlockType::KeyRoom2, BlockType::ExitRoom, BlockType::EvasionTunnel,
};

inline constexpr std::size_t index_of(BlockType t) { return static_cast<std::size_t>(t); }

inline std::string_view to_string(BlockType t) {
  switch (t) {
  case BlockType::Straight: return "Straight";
  case BlockType::Corner: return "Corner";
  case BlockType::ThreeWay: return "ThreeWay";
  case BlockType::FourWay: return "FourWay";
  case BlockType::DeadEnd: return "DeadEnd";
  case BlockType::KeyRoom1: return "KeyRoom1";
  case BlockType::KeyRoom2: return "KeyRoom2";
  case BlockType::ExitRoom: return "ExitRoom";
  case BlockType::EvasionTunnel: return "EvasionTunnel";
  }
  return "?";
}

inline std::optional<BlockType> block_type_from_string(std::string_view s) {
  for (BlockType t : kAllBlockTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

inline bool is_key_room(BlockType t) { return t == BlockType::KeyRoom1 || t == BlockType::KeyRoom2; }

// Types restricted to one live instance.
inline bool is_singleton(BlockType t) {
  return t == BlockType::DeadEnd || is_key_room(t) || t == BlockType::ExitRoom;
}

enum class Direction : std::uint8_t { North, East, South, West };

inline constexpr Direction kAllDirections[] = {Direction::North, Direction::East, Direction::South, Direction::West};

inline Direction rotate(Direction d, int quarter_turns) {
  return static_cast<Direction>((static_cast<int>(d) + quarter_turns % 4 + 4) % 4);
}

inline Direction opposite(Direction d) { return rotate(d, 2); }

struct Cell {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline Cell neighbour(Cell c, Direction d) {
  switch (d) {
  case Direction::North: return {c.x, c.y + 1};
  case Direction::East: return {c.x + 1, c.y};
  case Direction::South: return {c.x, c.y - 1};
  case Direction::West: return {c.x - 1, c.y};
  }
  return c;
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 centre_of(Cell c) { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }

// Cells are unit squares centred on integer coordinates.
inline Cell cell_of(Vec2 p) {
  return {static_cast<int>(std::floor(p.x + 0.5)), static_cast<int>(std::floor(p.y + 0.5))};
}

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline Vec2 unit(Direction d) {
  switch (d) {
  case Direction::North: return {0.0, 1.0};
  case Direction::East: return {1.0, 0.0};
  case Direction::South: return {0.0, -1.0};
  case Direction::West: return {-1.0, 0.0};
  }
  return {};
}

// Anchor directions at rotation 0. Rotating a block by r quarter turns rotates
// every anchor by r.
inline std::vector<Direction> base_anchors(BlockType t) {
  using D = Direction;
  switch (t) {
  case BlockType::Straight:
  case BlockType::EvasionTunnel: return {D::North, D::South};
  case BlockType::Corner: return {D::North, D::East};
  case BlockType::ThreeWay: return {D::North, D::East, D::West};
  case BlockType::FourWay:
  case BlockType::KeyRoom1:
  case BlockType::KeyRoom2: return {D::North, D::East, D::South, D::West};
  case BlockType::DeadEnd:
  case BlockType::ExitRoom: return {D::South};
  }
  return {};
}

inline std::size_t anchor_count(BlockType t) { return base_anchors(t).size(); }

// Bit set over directions.
inline unsigned anchor_mask(BlockType t, int rotation) {
  unsigned m = 0;
  for (Direction d : base_anchors(t)) m |= 1u << static_cast<unsigned>(rotate(d, rotation));
  return m;
}

using BlockId = std::uint32_t;

struct Anchor {
  Direction dir = Direction::North;
  std::optional<BlockId> link;
  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct Block {
  BlockId id = 0;
  BlockType type = BlockType::Straight;
  Cell cell;
  int rotation = 0; // quarter turns clockwise
  std::vector<Anchor> anchors;
  bool active = false;

  int rotation_degrees() const { return rotation * 90; }

  const Anchor* anchor_toward(Direction d) const {
    for (const auto& a : anchors)
      if (a.dir == d) return &a;
    return nullptr;
  }
  Anchor* anchor_toward(Direction d) {
    for (auto& a : anchors)
      if (a.dir == d) return &a;
    return nullptr;
  }

  std::vector<BlockId> linked() const {
    std::vector<BlockId> out;
    for (const auto& a : anchors)
      if (a.link) out.push_back(*a.link);
    return out;
  }

  friend bool operator==(const Block&, const Block&) = default;
};

class WorldGraph {
public:
  const std::map<BlockId, Block>& blocks() const { return blocks_; }
  const std::map<Cell, BlockId>& occupancy() const { return occupancy_; }
  std::uint64_t total_spawned() const { return total_spawned_; }
  std::size_t size() const { return blocks_.size(); }

  bool contains(BlockId id) const { return blocks_.count(id) != 0; }
  const Block& block(BlockId id) const {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) throw GenerationError("unknown block id " + std::to_string(id));
    return it->second;
  }
  Block& block(BlockId id) {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) throw GenerationError("unknown block id " + std::to_string(id));
    return it->second;
  }

  const Block* block_at(Cell c) const {
    auto it = occupancy_.find(c);
    return it == occupancy_.end() ? nullptr : &blocks_.at(it->second);
  }

  std::size_t count(BlockType t) const { return type_counts_[index_of(t)]; }
  bool has(BlockType t) const { return count(t) != 0; }

  // Inserts a block with fresh id; anchors unlinked. Caller guarantees the
  // cell is free.
  BlockId insert(BlockType type, Cell cell, int rotation) {
    Block b;
    b.id = next_id_++;
    b.type = type;
    b.cell = cell;
    b.rotation = rotation;
    for (Direction d : base_anchors(type)) b.anchors.push_back({rotate(d, rotation), std::nullopt});
    occupancy_.emplace(cell, b.id);
    ++type_counts_[index_of(type)];
    ++total_spawned_;
    const BlockId id = b.id;
    blocks_.emplace(id, std::move(b));
    return id;
  }

  // Removes a block and clears the partner end of every link.
  Block erase(BlockId id) {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) throw GenerationError("erase of unknown block " + std::to_string(id));
    Block b = std::move(it->second);
    blocks_.erase(it);
    occupancy_.erase(b.cell);
    --type_counts_[index_of(b.type)];
    for (const auto& a : b.anchors) {
      if (!a.link) continue;
      auto other = blocks_.find(*a.link);
      if (other == blocks_.end()) continue;
      for (auto& oa : other->second.anchors)
        if (oa.link == id) oa.link.reset();
    }
    return b;
  }

  static void link(Block& a, Direction from_a, Block& b) {
    a.anchor_toward(from_a)->link = b.id;
    b.anchor_toward(opposite(from_a))->link = a.id;
  }

  friend bool operator==(const WorldGraph&, const WorldGraph&) = default;

private:
  std::map<BlockId, Block> blocks_;
  std::map<Cell, BlockId> occupancy_;
  std::array<std::size_t, kBlockTypeCount> type_counts_{};
  std::uint64_t total_spawned_ = 0;
  BlockId next_id_ = 1;
};

// Blocks that must still spawn before a special type may spawn (again).
inline constexpr int kKeyRoomDelay = 6;
inline constexpr int kExitRoomDelay = 10;
inline constexpr int kDeadEndInitialDelay = 4;

inline constexpr int respawn_delay(BlockType t) {
  if (t == BlockType::KeyRoom1 || t == BlockType::KeyRoom2) return kKeyRoomDelay;
  if (t == BlockType::ExitRoom) return kExitRoomDelay;
  return 0;
}

struct DelayTable {
  std::array<int, kBlockTypeCount> remaining{};

  int get(BlockType t) const { return remaining[index_of(t)]; }
  bool ready(BlockType t) const { return get(t) == 0; }

  // One block of type t spawned: every counter ticks down, then t restarts.
  void on_spawn(BlockType t) {
    for (int& r : remaining) r = r > 0 ? r - 1 : 0;
    remaining[index_of(t)] = respawn_delay(t);
  }

  // A removed special room stays away for its full delay.
  void on_despawn(BlockType t) {
    if (respawn_delay(t) > 0) remaining[index_of(t)] = respawn_delay(t);
  }

  friend bool operator==(const DelayTable&, const DelayTable&) = default;
};

using TypeWeights = std::array<double, kBlockTypeCount>;

inline TypeWeights default_weights() {
  TypeWeights w{};
  w[index_of(BlockType::Straight)] = 40.0;
  w[index_of(BlockType::Corner)] = 20.0;
  w[index_of(BlockType::ThreeWay)] = 15.0;
  w[index_of(BlockType::FourWay)] = 10.0;
  w[index_of(BlockType::DeadEnd)] = 5.0;
  w[index_of(BlockType::EvasionTunnel)] = 5.0;
  w[index_of(BlockType::KeyRoom1)] = 2.5;
  w[index_of(BlockType::KeyRoom2)] = 2.5;
  w[index_of(BlockType::ExitRoom)] = 2.5;
  return w;
}

struct SpawningSphere {
  Vec2 centre;
  double radius = 1.5;
  BlockId current_block = 0;
};

// ---------------------------------------------------------------------------
// Placement log: `tick,spawn|despawn,block_id,type,x,y,rotation`

struct PlacementEvent {
  std::uint64_t tick = 0;
  bool spawn = true;
  BlockId block_id = 0;
  BlockType type = BlockType::Straight;
  Cell cell;
  int rotation_degrees = 0;
  friend bool operator==(const PlacementEvent&, const PlacementEvent&) = default;
};

inline std::string format_placement(const PlacementEvent& e) {
  return std::to_string(e.tick) + (e.spawn ? ",spawn," : ",despawn,") + std::to_string(e.block_id) + ',' +
         std::string(to_string(e.type)) + ',' + std::to_string(e.cell.x) + ',' + std::to_string(e.cell.y) + ',' +
         std::to_string(e.rotation_degrees);
}

inline std::string format_placement_log(std::span<const PlacementEvent> events) {
  std::string out;
  for (const auto& e : events) out += format_placement(e) + '\n';
  return out;
}

inline std::vector<PlacementEvent> parse_placement_log(std::string_view content) {
  std::vector<PlacementEvent> out;
  std::size_t lineno = 0;
  for (auto line : text::lines(content)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, ',');
    auto fail = [&] { return InputError("placement log line " + std::to_string(lineno) + " is malformed"); };
    if (f.size() != 7) throw fail();
    PlacementEvent e;
    auto tick = text::parse_int<std::uint64_t>(f[0]);
    auto id = text::parse_int<BlockId>(f[2]);
    auto type = block_type_from_string(f[3]);
    auto x = text::parse_int<int>(f[4]);
    auto y = text::parse_int<int>(f[5]);
    auto rot = text::parse_int<int>(f[6]);
    if (!tick || !id || !type || !x || !y || !rot || (f[1] != "spawn" && f[1] != "despawn")) throw fail();
    e.tick = *tick;
    e.spawn = f[1] == "spawn";
    e.block_id = *id;
    e.type = *type;
    e.cell = {*x, *y};
    e.rotation_degrees = *rot;
    out.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rules

inline WorldGraph init_world() {
  WorldGraph w;
  const BlockId id = w.insert(BlockType::ExitRoom, {0, 0}, 0);
  w.block(id).active = true;
  return w;
}

inline DelayTable initial_delays() {
  DelayTable d;
  d.remaining[index_of(BlockType::DeadEnd)] = kDeadEndInitialDelay;
  // The exit room spawned with the world.
  d.remaining[index_of(BlockType::ExitRoom)] = kExitRoomDelay;
  return d;
}

// Delay and singleton rules only; geometry is checked separately.
inline bool can_spawn(BlockType t, const WorldGraph& world, const DelayTable& delays) {
  if (!delays.ready(t)) return false;
  switch (t) {
  case BlockType::DeadEnd: return !world.has(BlockType::DeadEnd);
  case BlockType::KeyRoom1:
  case BlockType::KeyRoom2:
    return !world.has(BlockType::KeyRoom1) && !world.has(BlockType::KeyRoom2) && !world.has(BlockType::ExitRoom);
  case BlockType::ExitRoom: return !world.has(BlockType::ExitRoom);
  default: return true;
  }
}

using TypeFilter = std::function<bool(BlockType)>;

// Draws among rule-eligible types proportionally to weight. The optional
// filter narrows the candidates further (e.g. to types that fit a cell).
inline std::optional<BlockType> try_select_block_type(Rng& rng, const WorldGraph& world, const DelayTable& delays,
                                                      const TypeWeights& weights, const TypeFilter& filter = {}) {
  std::array<double, kBlockTypeCount> w{};
  for (BlockType t : kAllBlockTypes) {
    const double wt = weights[index_of(t)];
    if (!(wt > 0.0) || !std::isfinite(wt)) continue;
    if (!can_spawn(t, world, delays)) continue;
    if (filter && !filter(t)) continue;
    w[index_of(t)] = wt;
  }
  const std::size_t i = rng.weighted_index(w);
  if (i >= kBlockTypeCount) return std::nullopt;
  return kAllBlockTypes[i];
}

inline BlockType select_block_type(Rng& rng, const WorldGraph& world, const DelayTable& delays,
                                   const TypeWeights& weights, const TypeFilter& filter = {}) {
  auto t = try_select_block_type(rng, world, delays, weights, filter);
  if (!t) throw GenerationError("no eligible block type with positive weight");
  return *t;
}

// Anchor directions a block at `cell` must expose (neighbours facing it) and
// must not expose (neighbours without a matching end).
struct CellConstraint {
  unsigned required = 0;
  unsigned forbidden = 0;
};

inline CellConstraint constraint_at(const WorldGraph& world, Cell cell) {
  CellConstraint c;
  for (Direction d : kAllDirections) {
    const Block* n = world.block_at(neighbour(cell, d));
    if (!n) continue;
    if (n->anchor_toward(opposite(d)))
      c.required |= 1u << static_cast<unsigned>(d);
    else
      c.forbidden |= 1u << static_cast<unsigned>(d);
  }
  return c;
}

inline std::vector<int> fitting_rotations(BlockType t, CellConstraint c) {
  std::vector<int> out;
  std::set<unsigned> seen;
  for (int r = 0; r < 4; ++r) {
    const unsigned m = anchor_mask(t, r);
    if ((m & c.required) != c.required || (m & c.forbidden) != 0) continue;
    // Symmetric shapes repeat masks; keep one rotation per distinct shape.
    if (!seen.insert(m).second) continue;
    out.push_back(r);
  }
  return out;
}

struct StepResult {
  std::vector<BlockId> spawned;
  std::vector<Block> despawned;
  std::optional<BlockId> entered;
  std::optional<BlockId> left;
};

namespace detail {

inline BlockId place(WorldGraph& world, DelayTable& delays, BlockType type, Cell cell, int rotation,
                     std::uint64_t tick, std::vector<PlacementEvent>* log) {
  const BlockId id = world.insert(type, cell, rotation);
  Block& b = world.block(id);
  for (auto& a : b.anchors) {
    const Block* n = world.block_at(neighbour(cell, a.dir));
    if (!n) continue;
    Block& nb = world.block(n->id);
    WorldGraph::link(b, a.dir, nb);
  }
  delays.on_spawn(type);
  if (log) log->push_back({tick, true, id, type, cell, rotation * 90});
  return id;
}

inline void remove(WorldGraph& world, DelayTable& delays, BlockId id, std::uint64_t tick,
                   std::vector<PlacementEvent>* log, StepResult& result) {
  Block b = world.erase(id);
  delays.on_despawn(b.type);
  if (log) log->push_back({tick, false, b.id, b.type, b.cell, b.rotation_degrees()});
  result.despawned.push_back(std::move(b));
}

// Spawns one block on the open anchor of `parent` facing `dir`.
inline BlockId spawn_at_anchor(WorldGraph& world, DelayTable& delays, BlockId parent, Direction dir, Rng& rng,
                               const TypeWeights& weights, std::uint64_t tick, std::vector<PlacementEvent>* log) {
  const Cell target = neighbour(world.block(parent).cell, dir);
  if (world.block_at(target))
    throw GenerationError("open anchor faces an occupied cell at (" + std::to_string(target.x) + "," +
                          std::to_string(target.y) + ")");
  const CellConstraint cons = constraint_at(world, target);
  auto fits = [&](BlockType t) { return !fitting_rotations(t, cons).empty(); };

  std::optional<BlockType> chosen = try_select_block_type(rng, world, delays, weights, fits);
  if (!chosen) {
    // Nothing weighted fits: cap with a dead end, else a straight, else any
    // legal shape that fits.
    if (can_spawn(BlockType::DeadEnd, world, delays) && fits(BlockType::DeadEnd))
      chosen = BlockType::DeadEnd;
    else if (fits(BlockType::Straight))
      chosen = BlockType::Straight;
    else {
      for (BlockType t : kAllBlockTypes) {
        if (can_spawn(t, world, delays) && fits(t)) {
          chosen = t;
          break;
        }
      }
    }
  }
  if (!chosen)
    throw GenerationError("no block type can be placed at (" + std::to_string(target.x) + "," +
                          std::to_string(target.y) + ")");
  const auto rotations = fitting_rotations(*chosen, cons);
  const int rotation = rotations[rng.below(rotations.size())];
  return place(world, delays, *chosen, target, rotation, tick, log);
}

inline void fill_open_anchors(WorldGraph& world, DelayTable& delays, BlockId id, Rng& rng, const TypeWeights& weights,
                              std::uint64_t tick, std::vector<PlacementEvent>* log, StepResult& result) {
  for (Direction d : kAllDirections) {
    const Anchor* a = world.block(id).anchor_toward(d);
    if (!a || a->link) continue;
    result.spawned.push_back(spawn_at_anchor(world, delays, id, d, rng, weights, tick, log));
  }
}

// Removes every block no longer reachable from `root` through links.
inline void prune_unreachable(WorldGraph& world, DelayTable& delays, BlockId root, std::uint64_t tick,
                              std::vector<PlacementEvent>* log, StepResult& result) {
  std::set<BlockId> seen{root};
  std::vector<BlockId> stack{root};
  while (!stack.empty()) {
    const BlockId cur = stack.back();
    stack.pop_back();
    for (BlockId n : world.block(cur).linked())
      if (seen.insert(n).second) stack.push_back(n);
  }
  if (seen.size() == world.size()) return;
  std::vector<BlockId> orphans;
  for (const auto& [id, b] : world.blocks())
    if (!seen.count(id)) orphans.push_back(id);
  for (BlockId id : orphans) remove(world, delays, id, tick, log, result);
}

} // namespace detail

// Advances the generator to the sphere's current centre. A change of cell
// leaves the old block (inactive, other neighbours removed) and enters the new
// one (active). The current active block always has all its anchors filled.
// The sphere may only move into a block linked to its current one.
inline StepResult step_sphere(WorldGraph& world, DelayTable& delays, SpawningSphere& sphere, Rng& rng,
                              const TypeWeights& weights, std::uint64_t tick = 0,
                              std::vector<PlacementEvent>* log = nullptr) {
  StepResult result;
  if (!world.contains(sphere.current_block)) throw GenerationError("sphere block is not spawned");
  const Cell here = cell_of(sphere.centre);
  const Block& current = world.block(sphere.current_block);

  if (here != current.cell) {
    const Block* next = world.block_at(here);
    if (!next) throw GenerationError("sphere moved into an empty cell");
    const auto links = current.linked();
    if (std::find(links.begin(), links.end(), next->id) == links.end())
      throw GenerationError("sphere moved into a block not linked to its current block");
    const BlockId from = current.id;
    const BlockId to = next->id;

    Block& leaving = world.block(from);
    leaving.active = false;
    result.left = from;
    for (BlockId n : leaving.linked())
      if (n != to) detail::remove(world, delays, n, tick, log, result);
    detail::prune_unreachable(world, delays, to, tick, log, result);

    world.block(to).active = true;
    sphere.current_block = to;
    result.entered = to;
  }

  if (world.block(sphere.current_block).active)
    detail::fill_open_anchors(world, delays, sphere.current_block, rng, weights, tick, log, result);
  return result;
}

// World, delays, sphere and placement history bundled for the session loop.
class LevelGenerator {
public:
  explicit LevelGenerator(std::uint64_t seed, TypeWeights base_weights = default_weights())
      : world_(init_world()), delays_(initial_delays()), rng_(seed, Stream::Worldgen),
        base_weights_(base_weights) {
    const auto& exit = world_.blocks().begin()->second;
    sphere_.centre = centre_of(exit.cell);
    sphere_.current_block = exit.id;
    log_.push_back({0, true, exit.id, exit.type, exit.cell, 0});
  }

  StepResult step(Vec2 centre, const TypeWeights& weights, std::uint64_t tick) {
    sphere_.centre = centre;
    return step_sphere(world_, delays_, sphere_, rng_, weights, tick, &log_);
  }
  StepResult step(Vec2 centre, std::uint64_t tick) { return step(centre, base_weights_, tick); }

  const WorldGraph& world() const { return world_; }
  const DelayTable& delays() const { return delays_; }
  const SpawningSphere& sphere() const { return sphere_; }
  const std::vector<PlacementEvent>& log() const { return log_; }
  const TypeWeights& base_weights() const { return base_weights_; }
  Rng& rng() { return rng_; }

private:
  WorldGraph world_;
  DelayTable delays_;
  SpawningSphere sphere_;
  Rng rng_;
  TypeWeights base_weights_;
  std::vector<PlacementEvent> log_;
};

// Hop distance between two blocks over links; nullopt when disconnected.
inline std::optional<int> hop_distance(const WorldGraph& world, BlockId from, BlockId to) {
  if (!world.contains(from) || !world.contains(to)) return std::nullopt;
  if (from == to) return 0;
  std::map<BlockId, int> dist{{from, 0}};
  std::vector<BlockId> frontier{from};
  while (!frontier.empty()) {
    std::vector<BlockId> next;
    for (BlockId cur : frontier) {
      for (BlockId n : world.block(cur).linked()) {
        if (dist.count(n)) continue;
        dist[n] = dist[cur] + 1;
        if (n == to) return dist[n];
        next.push_back(n);
      }
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

} // namespace affectloop::worldgen
