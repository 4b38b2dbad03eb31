#pragma once

#include "sir/scenario.hpp"

namespace sir {

struct Action2D {
  Vec2 force;
};

inline Aabb object_aabb(const ObjectState& o, const ObjectSpec& spec) {
  // orientation snaps to 0 or pi/2: a quarter turn swaps the half extents
  const bool swapped = std::abs(std::sin(o.orient)) > 0.70710678;
  const Vec2 he = swapped ? Vec2{spec.half_extents.y, spec.half_extents.x} : spec.half_extents;
  return {{o.pos.x - he.x, o.pos.y - he.y}, {o.pos.x + he.x, o.pos.y + he.y}};
}

// Penetration depth of a circle into a box, with the direction that moves
// the circle out. Zero depth means separated or touching.
inline double circle_aabb_depth(const Vec2& c, double r, const Aabb& b, Vec2* out_normal) {
  const Vec2 cp{clamp(c.x, b.lo.x, b.hi.x), clamp(c.y, b.lo.y, b.hi.y)};
  const Vec2 d = c - cp;
  const double dist = d.norm();
  if (dist > 1e-12) {
    const double depth = r - dist;
    if (depth <= 0.0) return 0.0;
    if (out_normal) *out_normal = d * (1.0 / dist);
    return depth;
  }
  // center inside the box: exit along the closest face
  const double left = c.x - b.lo.x, right = b.hi.x - c.x;
  const double down = c.y - b.lo.y, up = b.hi.y - c.y;
  double m = left;
  Vec2 n{-1.0, 0.0};
  if (right < m) { m = right; n = {1.0, 0.0}; }
  if (down < m) { m = down; n = {0.0, -1.0}; }
  if (up < m) { m = up; n = {0.0, 1.0}; }
  if (out_normal) *out_normal = n;
  return m + r;
}

// Penetration depth of box a into box b along the minimal axis; the normal
// moves a out of b.
inline double aabb_aabb_depth(const Aabb& a, const Aabb& b, Vec2* out_normal) {
  const double ox = std::min(a.hi.x, b.hi.x) - std::max(a.lo.x, b.lo.x);
  const double oy = std::min(a.hi.y, b.hi.y) - std::max(a.lo.y, b.lo.y);
  if (ox <= 0.0 || oy <= 0.0) return 0.0;
  const Vec2 ca = a.center(), cb = b.center();
  if (ox <= oy) {
    if (out_normal) *out_normal = {ca.x < cb.x ? -1.0 : 1.0, 0.0};
    return ox;
  }
  if (out_normal) *out_normal = {0.0, ca.y < cb.y ? -1.0 : 1.0};
  return oy;
}

// Largest pairwise penetration in a state (agent/objects/walls/arena);
// used by validation and the non-penetration test suite.
inline double max_penetration(const ScenarioSpec& spec, const EnvState& s) {
  double worst = 0.0;
  const auto walls = spec.solid_walls();
  const double r = spec.agent_radius;
  worst = std::max(worst, spec.arena_min.x + r - s.agent_pos.x);
  worst = std::max(worst, s.agent_pos.x - (spec.arena_max.x - r));
  worst = std::max(worst, spec.arena_min.y + r - s.agent_pos.y);
  worst = std::max(worst, s.agent_pos.y - (spec.arena_max.y - r));
  for (const auto& w : walls) worst = std::max(worst, circle_aabb_depth(s.agent_pos, r, w, nullptr));
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const Aabb a = object_aabb(s.objects[i], spec.objects[i]);
    worst = std::max(worst, spec.arena_min.x - a.lo.x);
    worst = std::max(worst, a.hi.x - spec.arena_max.x);
    worst = std::max(worst, spec.arena_min.y - a.lo.y);
    worst = std::max(worst, a.hi.y - spec.arena_max.y);
    for (const auto& w : walls) worst = std::max(worst, aabb_aabb_depth(a, w, nullptr));
    worst = std::max(worst, circle_aabb_depth(s.agent_pos, r, a, nullptr));
    for (size_t j = i + 1; j < s.objects.size(); ++j)
      worst = std::max(worst, aabb_aabb_depth(a, object_aabb(s.objects[j], spec.objects[j]), nullptr));
  }
  return worst;
}

inline constexpr double kPenetrationTol = 1e-6;

inline bool state_valid(const ScenarioSpec& spec, const EnvState& s) {
  if (static_cast<int>(s.objects.size()) != static_cast<int>(spec.objects.size())) return false;
  return max_penetration(spec, s) <= kPenetrationTol;
}

// Deterministic quasi-static 2D pushing environment. Boxes move under agent
// contact via positional projection; walls are immovable; restitution 0.
class Maze2D {
 public:
  explicit Maze2D(ScenarioSpec spec)
      : spec_(std::move(spec)), walls_(spec_.solid_walls()), reward_spec_(RewardMode::Sparse, spec_.delta) {
    state_.objects.resize(spec_.objects.size());
  }

  const ScenarioSpec& spec() const { return spec_; }
  const EnvState& state() const { return state_; }
  const Goal& goal() const { return goal_; }
  const RewardSpec& reward_spec() const { return reward_spec_; }
  void set_reward_mode(RewardMode m, double dense_scale = 1.0) {
    reward_spec_ = RewardSpec(m, spec_.delta, dense_scale);
  }

  EnvState get_state() const { return state_; }

  void set_state(const EnvState& s) {
    if (static_cast<int>(s.objects.size()) != static_cast<int>(spec_.objects.size()))
      throw ValidationError("state object count mismatch");
    const double pen = max_penetration(spec_, s);
    if (pen > kPenetrationTol)
      throw ValidationError("state rejected: bodies overlap by " + std::to_string(pen));
    state_ = s;
  }

  void set_goal(const Goal& g) {
    if (g.target_index < 0 || g.target_index > static_cast<int>(spec_.objects.size()))
      throw ConfigError("goal selector index out of range");
    goal_ = g;
  }

  // Start an episode: state + goal + fresh step count.
  void begin_task(const Task& t) {
    set_state(t.initial_state);
    set_goal(t.goal);
    steps_ = 0;
  }
  void reset_step_count() { steps_ = 0; }
  int steps() const { return steps_; }
  int64_t lifetime_steps() const { return lifetime_steps_; }

  std::vector<double> observe() const { return sir::observe(state_, goal_, spec_.layout()); }

  Transition step(const Action2D& action) {
    Vec2 f = action.force;
    if (!std::isfinite(f.x) || !std::isfinite(f.y))
      throw ConfigError("action contains a non-finite force");
    const double fn = f.norm();
    if (fn > spec_.force_limit && fn > 0.0) f = f * (spec_.force_limit / fn);

    Transition tr;
    tr.state = state_;
    tr.action = f;
    tr.goal = goal_;

    // semi-implicit Euler with linear damping
    const double damp_a = std::max(0.0, 1.0 - spec_.damping * spec_.dt);
    const double damp_b = std::max(0.0, 1.0 - spec_.box_damping * spec_.dt);
    state_.agent_vel += f * (spec_.dt / spec_.agent_mass);
    state_.agent_vel = state_.agent_vel * damp_a;
    state_.agent_pos += state_.agent_vel * spec_.dt;
    std::vector<Vec2> pre(state_.objects.size());
    for (size_t i = 0; i < state_.objects.size(); ++i) {
      auto& o = state_.objects[i];
      pre[i] = o.pos;
      o.vel = o.vel * damp_b;
      o.pos += o.vel * spec_.dt;
    }

    resolve_contacts();

    for (size_t i = 0; i < state_.objects.size(); ++i) {
      auto& o = state_.objects[i];
      o.vel = (o.pos - pre[i]) * (1.0 / spec_.dt);
      o.ang_vel = 0.0;
    }

    ++steps_;
    ++lifetime_steps_;
    tr.next_state = state_;
    tr.achieved = achieved_position(state_, goal_);
    tr.reward = reward(reward_spec_, tr.state, state_, goal_);
    tr.success = sparse_reward(state_, goal_, spec_.delta) == 1.0;
    tr.done = tr.success || steps_ >= spec_.step_limit;
    return tr;
  }

 private:
  ScenarioSpec spec_;
  std::vector<Aabb> walls_;
  RewardSpec reward_spec_;
  EnvState state_;
  Goal goal_;
  int steps_ = 0;
  int64_t lifetime_steps_ = 0;

  void kill_agent_normal_vel(const Vec2& outward) {
    // remove the velocity component driving into the contact
    const double vn = state_.agent_vel.dot(outward);
    if (vn < 0.0) state_.agent_vel -= outward * vn;
  }

  void clamp_agent_arena() {
    const double r = spec_.agent_radius;
    auto& p = state_.agent_pos;
    if (p.x < spec_.arena_min.x + r) { p.x = spec_.arena_min.x + r; kill_agent_normal_vel({1.0, 0.0}); }
    if (p.x > spec_.arena_max.x - r) { p.x = spec_.arena_max.x - r; kill_agent_normal_vel({-1.0, 0.0}); }
    if (p.y < spec_.arena_min.y + r) { p.y = spec_.arena_min.y + r; kill_agent_normal_vel({0.0, 1.0}); }
    if (p.y > spec_.arena_max.y - r) { p.y = spec_.arena_max.y - r; kill_agent_normal_vel({0.0, -1.0}); }
  }

  // clamp box i against arena borders and walls; returns true if it moved
  bool clamp_box_statics(size_t i) {
    auto& o = state_.objects[i];
    const Vec2 before = o.pos;
    Aabb a = object_aabb(o, spec_.objects[i]);
    const Vec2 he = a.half();
    o.pos.x = clamp(o.pos.x, spec_.arena_min.x + he.x, spec_.arena_max.x - he.x);
    o.pos.y = clamp(o.pos.y, spec_.arena_min.y + he.y, spec_.arena_max.y - he.y);
    for (const auto& w : walls_) {
      a = object_aabb(o, spec_.objects[i]);
      Vec2 n;
      const double d = aabb_aabb_depth(a, w, &n);
      if (d > 0.0) o.pos += n * d;
    }
    return (o.pos - before).norm() > 0.0;
  }

  void resolve_contacts() {
    const int max_iters = 48;
    for (int iter = 0; iter < max_iters; ++iter) {
      bool dirty = false;

      clamp_agent_arena();
      for (const auto& w : walls_) {
        Vec2 n;
        const double d = circle_aabb_depth(state_.agent_pos, spec_.agent_radius, w, &n);
        if (d > 0.0) {
          state_.agent_pos += n * d;
          kill_agent_normal_vel(n);
          dirty = true;
        }
      }

      // boxes out of statics first so pushes resolve against settled poses
      for (size_t i = 0; i < state_.objects.size(); ++i) dirty |= clamp_box_statics(i);

      // agent pushes boxes; what a box cannot yield comes back on the agent
      for (size_t i = 0; i < state_.objects.size(); ++i) {
        auto& o = state_.objects[i];
        Vec2 n;  // direction moving the agent out of the box
        const double d =
            circle_aabb_depth(state_.agent_pos, spec_.agent_radius, object_aabb(o, spec_.objects[i]), &n);
        if (d <= 0.0) continue;
        dirty = true;
        const Vec2 push = n * (-d);  // box moves opposite the agent's exit direction
        const Vec2 before = o.pos;
        o.pos += push;
        clamp_box_statics(i);
        const double yielded = (o.pos - before).dot(n * -1.0);
        const double residual = d - yielded;
        if (residual > 1e-12) {
          state_.agent_pos += n * residual;
          kill_agent_normal_vel(n);
        }
      }

      // box-box: split the separation evenly, then re-settle against statics
      for (size_t i = 0; i < state_.objects.size(); ++i) {
        for (size_t j = i + 1; j < state_.objects.size(); ++j) {
          Vec2 n;
          const double d = aabb_aabb_depth(object_aabb(state_.objects[i], spec_.objects[i]),
                                           object_aabb(state_.objects[j], spec_.objects[j]), &n);
          if (d <= 0.0) continue;
          dirty = true;
          state_.objects[i].pos += n * (0.5 * d);
          state_.objects[j].pos -= n * (0.5 * d);
          clamp_box_statics(i);
          clamp_box_statics(j);
        }
      }

      if (!dirty) return;
    }
    // projection did not settle; force the agent out as the final yield
    for (int pass = 0; pass < 8; ++pass) {
      bool dirty = false;
      clamp_agent_arena();
      for (const auto& w : walls_) {
        Vec2 n;
        const double d = circle_aabb_depth(state_.agent_pos, spec_.agent_radius, w, &n);
        if (d > 0.0) { state_.agent_pos += n * d; kill_agent_normal_vel(n); dirty = true; }
      }
      for (size_t i = 0; i < state_.objects.size(); ++i) {
        Vec2 n;
        const double d = circle_aabb_depth(state_.agent_pos, spec_.agent_radius,
                                           object_aabb(state_.objects[i], spec_.objects[i]), &n);
        if (d > 0.0) { state_.agent_pos += n * d; kill_agent_normal_vel(n); dirty = true; }
      }
      if (!dirty) break;
    }
  }
};

// Copies of `state` with object `object_index` moved to collision-free grid
// placements; the grid is anchored at arena_min + resolution/2. Placements
// equal to the current pose are not re-emitted.
inline std::vector<EnvState> enumerate_candidate_states(const ScenarioSpec& spec,
                                                        const EnvState& state, int object_index,
                                                        double grid_resolution) {
  if (object_index < 0 || object_index >= static_cast<int>(spec.objects.size()))
    throw ConfigError("candidate object index out of range");
  if (grid_resolution <= 0.0) throw ConfigError("grid resolution must be positive");
  std::vector<EnvState> out;
  const Vec2 cur = state.objects[object_index].pos;
  for (double x = spec.arena_min.x + grid_resolution * 0.5; x < spec.arena_max.x;
       x += grid_resolution) {
    for (double y = spec.arena_min.y + grid_resolution * 0.5; y < spec.arena_max.y;
         y += grid_resolution) {
      if (std::abs(x - cur.x) < 1e-9 && std::abs(y - cur.y) < 1e-9) continue;
      EnvState cand = state;
      cand.objects[object_index].pos = {x, y};
      cand.objects[object_index].vel = {0.0, 0.0};
      if (state_valid(spec, cand)) out.push_back(std::move(cand));
    }
  }
  return out;
}

// Uniform collision-free placements of one object; used by the random
// reduction search. Orientation flips are unreachable for the policy (boxes
// never rotate mid-episode), so they stay off by default.
inline std::vector<EnvState> sampled_candidate_states(const ScenarioSpec& spec,
                                                      const EnvState& state, int object_index,
                                                      int count, Rng& rng,
                                                      bool allow_orientation_flip = false) {
  if (object_index < 0 || object_index >= static_cast<int>(spec.objects.size()))
    throw ConfigError("candidate object index out of range");
  std::vector<EnvState> out;
  out.reserve(count);
  const auto& ospec = spec.objects[object_index];
  int tries = 0;
  const int max_tries = count * 64;
  while (static_cast<int>(out.size()) < count && tries < max_tries) {
    ++tries;
    EnvState cand = state;
    auto& o = cand.objects[object_index];
    if (allow_orientation_flip && ospec.kind == ObjectKind::Elongated)
      o.orient = uniform_int(rng, 0, 1) == 0 ? 0.0 : M_PI / 2.0;
    const Vec2 he = object_aabb(o, ospec).half();
    o.pos = {uniform(rng, spec.arena_min.x + he.x, spec.arena_max.x - he.x),
             uniform(rng, spec.arena_min.y + he.y, spec.arena_max.y - he.y)};
    o.vel = {0.0, 0.0};
    if (state_valid(spec, cand)) out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace sir
