#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sir/common.hpp"

namespace sir {

enum class ObjectKind { Cubic, Elongated };

struct ObjectState {
  ObjectKind kind = ObjectKind::Cubic;
  Vec2 pos;
  double orient = 0.0;  // radians; boxes snap to 0 or pi/2
  Vec2 vel;
  double ang_vel = 0.0;
};

// Full simulator state: agent pose plus the fixed-order object list.
struct EnvState {
  Vec2 agent_pos;
  Vec2 agent_vel;
  std::vector<ObjectState> objects;

  bool operator==(const EnvState& o) const {
    if (!(agent_pos.x == o.agent_pos.x && agent_pos.y == o.agent_pos.y &&
          agent_vel.x == o.agent_vel.x && agent_vel.y == o.agent_vel.y))
      return false;
    if (objects.size() != o.objects.size()) return false;
    for (size_t i = 0; i < objects.size(); ++i) {
      const auto &a = objects[i], &b = o.objects[i];
      if (!(a.kind == b.kind && a.pos.x == b.pos.x && a.pos.y == b.pos.y &&
            a.orient == b.orient && a.vel.x == b.vel.x && a.vel.y == b.vel.y &&
            a.ang_vel == b.ang_vel))
        return false;
    }
    return true;
  }
};

// target_index 0 selects the agent, 1..N the objects (one-hot selector).
struct Goal {
  Vec2 target_pos;
  int target_index = 0;
};

struct Task {
  EnvState initial_state;
  Goal goal;
  std::string scenario_id;
  bool hard = false;
};

enum class RewardMode { Sparse, Dense };

struct RewardSpec {
  RewardMode mode = RewardMode::Sparse;
  double delta = 0.05;      // success radius, meters
  double dense_scale = 1.0;  // potential coefficient for the DS baseline

  RewardSpec() = default;
  RewardSpec(RewardMode m, double d, double s = 1.0) : mode(m), delta(d), dense_scale(s) {
    if (delta <= 0.0) throw ConfigError("reward delta must be positive");
  }
};

struct Transition {
  EnvState state;
  Vec2 action;
  double reward = 0.0;
  EnvState next_state;
  Goal goal;
  bool done = false;
  Vec2 achieved;  // position of the selected target object after the step
  bool success = false;
};

inline Vec2 achieved_position(const EnvState& s, const Goal& g) {
  if (g.target_index == 0) return s.agent_pos;
  const int oi = g.target_index - 1;
  if (oi < 0 || oi >= static_cast<int>(s.objects.size()))
    throw ConfigError("goal selector index out of range");
  return s.objects[oi].pos;
}

// Sparse goal indicator: 1 iff the selected object sits within delta of the
// target (boundary inclusive).
inline double sparse_reward(const EnvState& next_state, const Goal& goal, double delta) {
  return distance(achieved_position(next_state, goal), goal.target_pos) <= delta ? 1.0 : 0.0;
}

// Dense variant adds potential shaping dense_scale * (d_prev - d_next) on
// top of the sparse term, so the sparse optimum is preserved.
inline double reward(const RewardSpec& spec, const EnvState& prev_state,
                     const EnvState& next_state, const Goal& goal) {
  const double sparse = sparse_reward(next_state, goal, spec.delta);
  if (spec.mode == RewardMode::Sparse) return sparse;
  const double d_prev = distance(achieved_position(prev_state, goal), goal.target_pos);
  const double d_next = distance(achieved_position(next_state, goal), goal.target_pos);
  return spec.dense_scale * (d_prev - d_next) + sparse;
}

// Observation layout, constant per scenario:
//   [agent pose+vel (4) | object blocks (6 each) | achieved (2 + onehot)
//    | desired (2 + onehot)]
// The one-hot selector spans {agent, object_1..N} and is omitted entirely
// when the scenario has no objects.
struct ObsLayout {
  int n_objects = 0;

  static constexpr int kAgentLen = 4;
  static constexpr int kObjLen = 6;

  int onehot_len() const { return n_objects > 0 ? n_objects + 1 : 0; }
  int goal_block_len() const { return 2 + onehot_len(); }
  int agent_offset() const { return 0; }
  int object_offset(int i) const { return kAgentLen + i * kObjLen; }
  int achieved_offset() const { return kAgentLen + n_objects * kObjLen; }
  int desired_offset() const { return achieved_offset() + goal_block_len(); }
  int dim() const { return kAgentLen + n_objects * kObjLen + 2 * goal_block_len(); }
};

inline void observe_into(const EnvState& s, const Goal& g, const ObsLayout& layout,
                         double* out) {
  if (static_cast<int>(s.objects.size()) != layout.n_objects)
    throw ConfigError("state object count does not match scenario layout");
  if (g.target_index < 0 || g.target_index > layout.n_objects)
    throw ConfigError("goal selector index out of range");
  double* p = out;
  *p++ = s.agent_pos.x;
  *p++ = s.agent_pos.y;
  *p++ = s.agent_vel.x;
  *p++ = s.agent_vel.y;
  for (const auto& o : s.objects) {
    *p++ = o.pos.x;
    *p++ = o.pos.y;
    *p++ = o.orient;
    *p++ = o.vel.x;
    *p++ = o.vel.y;
    *p++ = o.ang_vel;
  }
  const Vec2 ach = achieved_position(s, g);
  *p++ = ach.x;
  *p++ = ach.y;
  for (int i = 0; i < layout.onehot_len(); ++i) *p++ = (i == g.target_index) ? 1.0 : 0.0;
  *p++ = g.target_pos.x;
  *p++ = g.target_pos.y;
  for (int i = 0; i < layout.onehot_len(); ++i) *p++ = (i == g.target_index) ? 1.0 : 0.0;
}

inline std::vector<double> observe(const EnvState& s, const Goal& g, const ObsLayout& layout) {
  std::vector<double> out(layout.dim());
  observe_into(s, g, layout, out.data());
  return out;
}

}  // namespace sir
