#pragma once

#include <algorithm>

#include "sir/sim.hpp"

namespace sir {

namespace detail {

inline Vec2 uniform_point(const ScenarioSpec& spec, const Vec2& margin, Rng& rng) {
  return {uniform(rng, spec.arena_min.x + margin.x, spec.arena_max.x - margin.x),
          uniform(rng, spec.arena_min.y + margin.y, spec.arena_max.y - margin.y)};
}

// goal position must leave the target shape clear of walls and the arena edge
inline bool goal_position_ok(const ScenarioSpec& spec, const Goal& g) {
  if (g.target_index == 0) {
    const double r = spec.agent_radius;
    if (g.target_pos.x < spec.arena_min.x + r || g.target_pos.x > spec.arena_max.x - r ||
        g.target_pos.y < spec.arena_min.y + r || g.target_pos.y > spec.arena_max.y - r)
      return false;
    for (const auto& w : spec.solid_walls())
      if (circle_aabb_depth(g.target_pos, r, w, nullptr) > kPenetrationTol) return false;
    return true;
  }
  const auto& os = spec.objects[g.target_index - 1];
  ObjectState probe;
  probe.kind = os.kind;
  probe.pos = g.target_pos;
  probe.orient = 0.0;
  const Aabb a = object_aabb(probe, os);
  if (a.lo.x < spec.arena_min.x - kPenetrationTol || a.hi.x > spec.arena_max.x + kPenetrationTol ||
      a.lo.y < spec.arena_min.y - kPenetrationTol || a.hi.y > spec.arena_max.y + kPenetrationTol)
    return false;
  for (const auto& w : spec.solid_walls())
    if (aabb_aabb_depth(a, w, nullptr) > kPenetrationTol) return false;
  return true;
}

// pushing room: a box can only be driven away from a boundary if the agent
// fits behind it, so hard-case cube and goal placements keep this margin
// from arena edges and wall planes
inline double push_margin(const ScenarioSpec& spec, int object_index) {
  const Vec2 he = spec.objects[object_index].half_extents;
  return std::max(he.x, he.y) + 2.0 * spec.agent_radius + 0.02;
}

inline Vec2 pushable_point(const ScenarioSpec& spec, int object_index, double x_lo, double x_hi,
                           Rng& rng) {
  const double pad = push_margin(spec, object_index);
  double lo = std::max(x_lo, spec.arena_min.x) + pad;
  double hi = std::min(x_hi, spec.arena_max.x) - pad;
  Vec2 p{uniform(rng, lo, hi), uniform(rng, spec.arena_min.y + pad, spec.arena_max.y - pad)};
  return p;
}

inline bool clear_of_wall_planes(const ScenarioSpec& spec, const Vec2& p, double pad) {
  for (const auto& w : spec.walls)
    if (w.vertical && std::abs(p.x - w.coord) < pad + w.thickness * 0.5) return false;
  return true;
}

// convenience: place one object of the blocker kind flush against a doored
// wall, covering the gap
inline ObjectState door_blocking_pose(const ScenarioSpec& spec, int object_index,
                                      const WallSpec& wall, bool left_side) {
  ObjectState o;
  o.kind = spec.objects[object_index].kind;
  o.orient = 0.0;  // half extents are (thin, long): vertical at orientation 0
  const double he_x = spec.objects[object_index].half_extents.x;
  const double face = wall.coord + (left_side ? -1.0 : 1.0) * wall.thickness * 0.5;
  o.pos = {face + (left_side ? -he_x : he_x), wall.door_center};
  return o;
}

}  // namespace detail

// Uniform feasible task: collision-free placements, a reachable goal and a
// start that is not already within the success radius.
inline Task sample_random_task(const ScenarioSpec& spec, Rng& rng) {
  for (int attempt = 0; attempt < 2000; ++attempt) {
    EnvState s;
    s.objects.resize(spec.objects.size());
    for (size_t i = 0; i < spec.objects.size(); ++i) {
      auto& o = s.objects[i];
      o.kind = spec.objects[i].kind;
      o.orient = (o.kind == ObjectKind::Elongated && uniform_int(rng, 0, 1) == 1) ? M_PI / 2.0 : 0.0;
      const Vec2 he = object_aabb(o, spec.objects[i]).half();
      o.pos = detail::uniform_point(spec, he, rng);
    }
    s.agent_pos = detail::uniform_point(spec, {spec.agent_radius, spec.agent_radius}, rng);
    if (!state_valid(spec, s)) continue;

    Goal g;
    const int n = static_cast<int>(spec.objects.size());
    if (n == 0)
      g.target_index = 0;
    else
      g.target_index = spec.agent_targets ? uniform_int(rng, 0, n) : uniform_int(rng, 1, n);
    if (spec.fixed_goal && n == 0) {
      g.target_pos = spec.fixed_goal_pos;
    } else {
      g.target_pos = detail::uniform_point(spec, {0.0, 0.0}, rng);
    }
    if (!detail::goal_position_ok(spec, g)) continue;
    if (distance(achieved_position(s, g), g.target_pos) <= 2.0 * spec.delta) continue;

    Task t;
    t.initial_state = std::move(s);
    t.goal = g;
    t.scenario_id = spec.id;
    t.hard = false;
    return t;
  }
  throw ConfigError("could not sample a feasible task for scenario " + spec.id);
}

// Hard cases per scenario family (door blockers + cross-room goals).
inline Task generate_hard_case(const ScenarioSpec& spec, Rng& rng) {
  if (!spec.has_hard_cases)
    throw ConfigError("scenario " + spec.id + " has no hard-case generator");

  for (int attempt = 0; attempt < 2000; ++attempt) {
    EnvState s;
    s.objects.resize(spec.objects.size());
    Goal g;

    if (spec.id == "push2d") {
      // elongated blocker at its fixed door location; cubic and goal on
      // opposite sides of the wall, both with pushing room
      const WallSpec& wall = spec.walls[0];
      s.objects[1] = detail::door_blocking_pose(spec, 1, wall, true);
      auto& cube = s.objects[0];
      cube.kind = ObjectKind::Cubic;
      const double pad = detail::push_margin(spec, 0);
      const bool cube_left = uniform_int(rng, 0, 1) == 0;
      cube.pos = cube_left ? detail::pushable_point(spec, 0, spec.arena_min.x, wall.coord, rng)
                           : detail::pushable_point(spec, 0, wall.coord, spec.arena_max.x, rng);
      if (!detail::clear_of_wall_planes(spec, cube.pos, pad)) continue;
      s.agent_pos = detail::uniform_point(spec, {spec.agent_radius, spec.agent_radius}, rng);
      g.target_index = 1;
      g.target_pos = cube_left
                         ? detail::pushable_point(spec, 0, wall.coord, spec.arena_max.x, rng)
                         : detail::pushable_point(spec, 0, spec.arena_min.x, wall.coord, rng);
      if (!detail::clear_of_wall_planes(spec, g.target_pos, pad)) continue;
    } else if (spec.id == "room3_fixed_goal") {
      // both doors blocked; blocker side follows the agent's room; cubic in
      // a non-goal room; goal at the fixed spot in the rightmost room
      s.agent_pos = detail::uniform_point(spec, {spec.agent_radius, spec.agent_radius}, rng);
      const int agent_room = spec.room_of(s.agent_pos.x);
      for (int k = 0; k < 2; ++k) {
        const bool left = (agent_room == 0) || (agent_room == 1 && k == 1);
        s.objects[k] = detail::door_blocking_pose(spec, k, spec.walls[k], left);
      }
      auto& cube = s.objects[2];
      cube.kind = ObjectKind::Cubic;
      const int cube_room = uniform_int(rng, 0, 1);
      const auto [lo, hi] = spec.room_span(cube_room);
      cube.pos = detail::pushable_point(spec, 2, lo, hi, rng);
      if (!detail::clear_of_wall_planes(spec, cube.pos, detail::push_margin(spec, 2))) continue;
      g.target_index = 3;
      g.target_pos = spec.fixed_goal_pos;
    } else if (spec.id == "room4") {
      // a random nonempty set of doors is blocked; goal in a different room
      // from the cubic box
      s.agent_pos = detail::uniform_point(spec, {spec.agent_radius, spec.agent_radius}, rng);
      const int agent_room = spec.room_of(s.agent_pos.x);
      const int n_doors = 3;
      std::vector<int> doors{0, 1, 2};
      std::shuffle(doors.begin(), doors.end(), rng);
      const int blocked = uniform_int(rng, 1, n_doors);
      std::vector<bool> is_blocked(n_doors, false);
      for (int k = 0; k < blocked; ++k) is_blocked[doors[k]] = true;
      for (int k = 0; k < n_doors; ++k) {
        if (is_blocked[k]) {
          const bool left = agent_room <= k;
          s.objects[k] = detail::door_blocking_pose(spec, k, spec.walls[k], left);
        } else {
          auto& o = s.objects[k];
          o.kind = ObjectKind::Elongated;
          o.orient = uniform_int(rng, 0, 1) == 1 ? M_PI / 2.0 : 0.0;
          const Vec2 he = object_aabb(o, spec.objects[k]).half();
          o.pos = detail::uniform_point(spec, he, rng);
        }
      }
      auto& cube = s.objects[3];
      cube.kind = ObjectKind::Cubic;
      const double pad = detail::push_margin(spec, 3);
      cube.pos = detail::pushable_point(spec, 3, spec.arena_min.x, spec.arena_max.x, rng);
      if (!detail::clear_of_wall_planes(spec, cube.pos, pad)) continue;
      const int cube_room = spec.room_of(cube.pos.x);
      std::vector<int> rooms;
      for (int r = 0; r < spec.num_rooms(); ++r)
        if (r != cube_room) rooms.push_back(r);
      const int goal_room = rooms[uniform_int(rng, 0, static_cast<int>(rooms.size()) - 1)];
      const auto [lo, hi] = spec.room_span(goal_room);
      g.target_index = 4;
      g.target_pos = detail::pushable_point(spec, 3, lo, hi, rng);
      if (!detail::clear_of_wall_planes(spec, g.target_pos, pad)) continue;
      // the goal zone must stay clear of the loose elongated boxes, or the
      // cube cannot settle there
      bool shadowed = false;
      for (int k = 0; k < n_doors; ++k) {
        if (is_blocked[k]) continue;
        ObjectState probe;
        probe.kind = ObjectKind::Cubic;
        probe.pos = g.target_pos;
        const Aabb goal_zone = object_aabb(probe, spec.objects[3]);
        Aabb inflated = object_aabb(s.objects[k], spec.objects[k]);
        const double m = spec.delta + 2.0 * spec.agent_radius;
        inflated.lo -= {m, m};
        inflated.hi += {m, m};
        if (aabb_aabb_depth(goal_zone, inflated, nullptr) > 0.0) shadowed = true;
      }
      if (shadowed) continue;
    } else {
      throw ConfigError("no hard-case generator for scenario " + spec.id);
    }

    if (!state_valid(spec, s)) continue;
    if (!detail::goal_position_ok(spec, g)) continue;
    if (distance(achieved_position(s, g), g.target_pos) <= 2.0 * spec.delta) continue;

    Task t;
    t.initial_state = std::move(s);
    t.goal = g;
    t.scenario_id = spec.id;
    t.hard = true;
    return t;
  }
  throw ConfigError("could not generate a hard case for scenario " + spec.id);
}

// Mixed sampler: p_hard hard cases, otherwise uniform tasks.
struct TaskSampler {
  ScenarioSpec spec;
  double p_hard = 0.0;

  TaskSampler(ScenarioSpec s, double hard_ratio) : spec(std::move(s)), p_hard(hard_ratio) {
    if (p_hard < 0.0 || p_hard > 1.0) throw ConfigError("p_hard must lie in [0,1]");
    if (p_hard > 0.0 && !spec.has_hard_cases)
      throw ConfigError("scenario " + spec.id + " has no hard-case generator");
  }

  Task sample(Rng& rng) const {
    if (p_hard > 0.0 && uniform(rng, 0.0, 1.0) < p_hard) return generate_hard_case(spec, rng);
    return sample_random_task(spec, rng);
  }
};

}  // namespace sir
