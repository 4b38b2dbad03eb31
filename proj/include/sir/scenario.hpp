#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sir/env.hpp"

namespace sir {

struct Aabb {
  Vec2 lo, hi;
  Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
  Vec2 half() const { return {(hi.x - lo.x) * 0.5, (hi.y - lo.y) * 0.5}; }
};

// Axis-aligned wall segment; a door_width > 0 cuts a centered gap into it.
struct WallSpec {
  bool vertical = true;
  double coord = 0.0;       // x for vertical walls, y for horizontal
  double lo = 0.0;          // span along the wall
  double hi = 1.0;
  double door_center = 0.5;  // along the span; ignored when door_width == 0
  double door_width = 0.0;
  double thickness = 0.04;
};

struct ObjectSpec {
  ObjectKind kind = ObjectKind::Cubic;
  Vec2 half_extents{0.04, 0.04};
};

struct ScenarioSpec {
  std::string id;
  Vec2 arena_min{0.0, 0.0};
  Vec2 arena_max{1.0, 1.0};
  std::vector<WallSpec> walls;
  std::vector<ObjectSpec> objects;
  double agent_radius = 0.03;
  double force_limit = 1.0;
  double agent_mass = 1.0;
  double damping = 2.0;      // agent linear damping coefficient
  double box_damping = 8.0;  // heavy: boxes are quasi-static
  double dt = 0.1;
  double delta = 0.05;  // success radius
  int step_limit = 100;
  bool has_hard_cases = false;
  bool fixed_goal = false;
  Vec2 fixed_goal_pos{0.0, 0.0};
  bool agent_targets = false;  // random tasks may select the agent itself

  ObsLayout layout() const { return ObsLayout{static_cast<int>(objects.size())}; }

  // Wall segments minus door gaps, as solid boxes.
  std::vector<Aabb> solid_walls() const {
    std::vector<Aabb> out;
    for (const auto& w : walls) {
      const double t = w.thickness * 0.5;
      auto push_span = [&](double a, double b) {
        if (b - a <= 1e-12) return;
        if (w.vertical)
          out.push_back({{w.coord - t, a}, {w.coord + t, b}});
        else
          out.push_back({{a, w.coord - t}, {b, w.coord + t}});
      };
      if (w.door_width > 0.0) {
        const double gl = w.door_center - w.door_width * 0.5;
        const double gh = w.door_center + w.door_width * 0.5;
        push_span(w.lo, gl);
        push_span(gh, w.hi);
      } else {
        push_span(w.lo, w.hi);
      }
    }
    return out;
  }

  // Room index by x coordinate for multi-room mazes (vertical full-height
  // walls sorted by x). Single room scenarios return 0.
  std::vector<double> room_dividers() const {
    std::vector<double> xs;
    for (const auto& w : walls)
      if (w.vertical && w.door_width > 0.0) xs.push_back(w.coord);
    std::sort(xs.begin(), xs.end());
    return xs;
  }
  int room_of(double x) const {
    int r = 0;
    for (double divider : room_dividers())
      if (x > divider) ++r;
    return r;
  }
  int num_rooms() const { return static_cast<int>(room_dividers().size()) + 1; }
  // x interval of a room, shrunk by the wall thickness
  std::pair<double, double> room_span(int room) const {
    auto xs = room_dividers();
    double lo = arena_min.x, hi = arena_max.x;
    double t = walls.empty() ? 0.0 : walls.front().thickness * 0.5;
    if (room > 0) lo = xs[room - 1] + t;
    if (room < static_cast<int>(xs.size())) hi = xs[room] - t;
    return {lo, hi};
  }

  void validate() const {
    if (dt <= 0.0) throw ConfigError("dt must be positive");
    if (delta <= 0.0) throw ConfigError("delta must be positive");
    if (arena_max.x <= arena_min.x || arena_max.y <= arena_min.y)
      throw ConfigError("arena must have positive area");
    double cubic = 0.0;
    for (const auto& o : objects)
      if (o.kind == ObjectKind::Cubic) cubic = std::max(cubic, 2.0 * o.half_extents.x);
    for (const auto& w : walls) {
      if (w.door_width > 0.0 && w.door_width <= cubic + 2.0 * agent_radius)
        throw ConfigError("door narrower than cubic box plus agent diameter");
    }
  }
};

// ---- JSON round trip ----

inline nlohmann::json to_json(const ScenarioSpec& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["arena"] = {s.arena_min.x, s.arena_min.y, s.arena_max.x, s.arena_max.y};
  j["walls"] = nlohmann::json::array();
  for (const auto& w : s.walls)
    j["walls"].push_back({{"vertical", w.vertical},
                          {"coord", w.coord},
                          {"lo", w.lo},
                          {"hi", w.hi},
                          {"door_center", w.door_center},
                          {"door_width", w.door_width},
                          {"thickness", w.thickness}});
  j["objects"] = nlohmann::json::array();
  for (const auto& o : s.objects)
    j["objects"].push_back({{"kind", o.kind == ObjectKind::Cubic ? "cubic" : "elongated"},
                            {"half_extents", {o.half_extents.x, o.half_extents.y}}});
  j["agent_radius"] = s.agent_radius;
  j["force_limit"] = s.force_limit;
  j["agent_mass"] = s.agent_mass;
  j["damping"] = s.damping;
  j["box_damping"] = s.box_damping;
  j["dt"] = s.dt;
  j["delta"] = s.delta;
  j["step_limit"] = s.step_limit;
  j["has_hard_cases"] = s.has_hard_cases;
  j["fixed_goal"] = s.fixed_goal;
  j["fixed_goal_pos"] = {s.fixed_goal_pos.x, s.fixed_goal_pos.y};
  j["agent_targets"] = s.agent_targets;
  return j;
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec s;
  s.id = j.at("id").get<std::string>();
  auto a = j.at("arena");
  s.arena_min = {a.at(0).get<double>(), a.at(1).get<double>()};
  s.arena_max = {a.at(2).get<double>(), a.at(3).get<double>()};
  for (const auto& w : j.at("walls")) {
    WallSpec ws;
    ws.vertical = w.at("vertical").get<bool>();
    ws.coord = w.at("coord").get<double>();
    ws.lo = w.at("lo").get<double>();
    ws.hi = w.at("hi").get<double>();
    ws.door_center = w.at("door_center").get<double>();
    ws.door_width = w.at("door_width").get<double>();
    ws.thickness = w.at("thickness").get<double>();
    s.walls.push_back(ws);
  }
  for (const auto& o : j.at("objects")) {
    ObjectSpec os;
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "cubic")
      os.kind = ObjectKind::Cubic;
    else if (kind == "elongated")
      os.kind = ObjectKind::Elongated;
    else
      throw ConfigError("unknown object kind: " + kind);
    os.half_extents = {o.at("half_extents").at(0).get<double>(),
                       o.at("half_extents").at(1).get<double>()};
    s.objects.push_back(os);
  }
  s.agent_radius = j.at("agent_radius").get<double>();
  s.force_limit = j.at("force_limit").get<double>();
  s.agent_mass = j.at("agent_mass").get<double>();
  s.damping = j.at("damping").get<double>();
  s.box_damping = j.at("box_damping").get<double>();
  s.dt = j.at("dt").get<double>();
  s.delta = j.at("delta").get<double>();
  s.step_limit = j.at("step_limit").get<int>();
  s.has_hard_cases = j.at("has_hard_cases").get<bool>();
  s.fixed_goal = j.at("fixed_goal").get<bool>();
  s.fixed_goal_pos = {j.at("fixed_goal_pos").at(0).get<double>(),
                      j.at("fixed_goal_pos").at(1).get<double>()};
  s.agent_targets = j.at("agent_targets").get<bool>();
  s.validate();
  return s;
}

inline ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

// ---- builtin scenarios ----

// Single room with a U-turn wall; navigation only, no objects.
inline ScenarioSpec make_u_shape(bool fixed_goal) {
  ScenarioSpec s;
  s.id = fixed_goal ? "u_shape_fixed" : "u_shape_random";
  s.arena_min = {0.0, 0.0};
  s.arena_max = {1.0, 1.0};
  WallSpec w;
  w.vertical = true;
  w.coord = 0.5;
  w.lo = 0.0;
  w.hi = 0.65;
  w.door_width = 0.0;
  s.walls.push_back(w);
  s.step_limit = 100;
  s.has_hard_cases = false;
  s.fixed_goal = fixed_goal;
  s.fixed_goal_pos = {0.8, 0.2};
  s.agent_targets = true;
  s.validate();
  return s;
}

// Two regions split by a doored wall; one cubic and one elongated box.
inline ScenarioSpec make_push2d() {
  ScenarioSpec s;
  s.id = "push2d";
  s.arena_min = {0.0, 0.0};
  s.arena_max = {1.0, 1.0};
  WallSpec w;
  w.vertical = true;
  w.coord = 0.5;
  w.lo = 0.0;
  w.hi = 1.0;
  w.door_center = 0.5;
  w.door_width = 0.22;
  s.walls.push_back(w);
  s.objects.push_back({ObjectKind::Cubic, {0.04, 0.04}});
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.14}});
  s.step_limit = 150;
  s.has_hard_cases = true;
  s.agent_targets = false;
  s.validate();
  return s;
}

// Three rooms, two doored walls, two elongated blockers and a cubic box.
// The hard-case goal sits at a fixed spot in the rightmost room.
inline ScenarioSpec make_room3_fixed_goal() {
  ScenarioSpec s;
  s.id = "room3_fixed_goal";
  s.arena_min = {0.0, 0.0};
  s.arena_max = {3.0, 1.0};
  for (double x : {1.0, 2.0}) {
    WallSpec w;
    w.vertical = true;
    w.coord = x;
    w.lo = 0.0;
    w.hi = 1.0;
    w.door_center = 0.5;
    w.door_width = 0.3;
    s.walls.push_back(w);
  }
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.18}});
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.18}});
  s.objects.push_back({ObjectKind::Cubic, {0.04, 0.04}});
  s.step_limit = 200;
  s.has_hard_cases = true;
  s.fixed_goal = true;
  s.fixed_goal_pos = {2.6, 0.5};
  s.agent_targets = true;
  s.validate();
  return s;
}

// Four rooms, three doored walls, three elongated blockers and a cubic box.
inline ScenarioSpec make_room4() {
  ScenarioSpec s;
  s.id = "room4";
  s.arena_min = {0.0, 0.0};
  s.arena_max = {3.0, 1.0};
  for (double x : {0.75, 1.5, 2.25}) {
    WallSpec w;
    w.vertical = true;
    w.coord = x;
    w.lo = 0.0;
    w.hi = 1.0;
    w.door_center = 0.5;
    w.door_width = 0.3;
    s.walls.push_back(w);
  }
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.18}});
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.18}});
  s.objects.push_back({ObjectKind::Elongated, {0.02, 0.18}});
  s.objects.push_back({ObjectKind::Cubic, {0.04, 0.04}});
  s.step_limit = 200;
  s.has_hard_cases = true;
  s.agent_targets = true;
  s.validate();
  return s;
}

inline std::vector<std::string> scenario_names() {
  return {"u_shape_fixed", "u_shape_random", "push2d", "room3_fixed_goal", "room4"};
}

inline ScenarioSpec make_scenario(const std::string& name) {
  if (name == "u_shape_fixed") return make_u_shape(true);
  if (name == "u_shape_random") return make_u_shape(false);
  if (name == "push2d") return make_push2d();
  if (name == "room3_fixed_goal") return make_room3_fixed_goal();
  if (name == "room4") return make_room4();
  // not a builtin: try a config file path
  if (name.size() > 5 && name.substr(name.size() - 5) == ".json") return load_scenario_file(name);
  std::ostringstream msg;
  msg << "unknown scenario '" << name << "'; valid scenarios:";
  for (const auto& n : scenario_names()) msg << " " << n;
  throw ConfigError(msg.str());
}

}  // namespace sir
