#pragma once

#include <functional>

#include "sir/buffers.hpp"
#include "sir/policy.hpp"
#include "sir/self_imitation.hpp"
#include "sir/sim.hpp"

namespace sir {

// Batched universal value evaluation over (state, goal) pairs.
using BatchValueFn =
    std::function<std::vector<double>(const std::vector<std::pair<EnvState, Goal>>&)>;

enum class CompositionOp { ProductNormalized, Min, Avg };

inline CompositionOp composition_from_string(const std::string& s) {
  if (s == "product" || s == "product_normalized") return CompositionOp::ProductNormalized;
  if (s == "min") return CompositionOp::Min;
  if (s == "avg") return CompositionOp::Avg;
  throw ConfigError("unknown composition operator: " + s);
}

struct ComposeDiagnostics {
  bool leg1_degenerate = false;  // pool max == min: leg carried no information
  bool leg2_degenerate = false;
};

// Combine the two leg value pools. The product operator min-max normalizes
// each leg over the candidate pool first; min/avg act on raw values.
inline std::vector<double> compose_values(const std::vector<double>& v1,
                                          const std::vector<double>& v2, CompositionOp op,
                                          ComposeDiagnostics* diag = nullptr) {
  if (v1.size() != v2.size()) throw ConfigError("compose_values: pool size mismatch");
  if (v1.empty()) throw ConfigError("compose_values: empty pools");
  const size_t n = v1.size();
  std::vector<double> out(n);
  switch (op) {
    case CompositionOp::Min:
      for (size_t i = 0; i < n; ++i) out[i] = std::min(v1[i], v2[i]);
      break;
    case CompositionOp::Avg:
      for (size_t i = 0; i < n; ++i) out[i] = 0.5 * (v1[i] + v2[i]);
      break;
    case CompositionOp::ProductNormalized: {
      auto normalized = [&](const std::vector<double>& v, bool* degenerate) {
        const auto [mn_it, mx_it] = std::minmax_element(v.begin(), v.end());
        const double mn = *mn_it, mx = *mx_it;
        std::vector<double> r(v.size());
        if (mx - mn <= 0.0) {
          // constant leg: treat as all ones and flag it
          std::fill(r.begin(), r.end(), 1.0);
          if (degenerate) *degenerate = true;
        } else {
          for (size_t i = 0; i < v.size(); ++i) r[i] = (v[i] - mn) / (mx - mn);
        }
        return r;
      };
      bool d1 = false, d2 = false;
      const auto n1 = normalized(v1, &d1);
      const auto n2 = normalized(v2, &d2);
      for (size_t i = 0; i < n; ++i) out[i] = n1[i] * n2[i];
      if (diag) {
        diag->leg1_degenerate = d1;
        diag->leg2_degenerate = d2;
      }
      break;
    }
  }
  return out;
}

// A proposed reduction target: the perturbed state s_B with its leg values
//   v_leg1 = V(s_A, s_B)  (reach the perturbed object pose)
//   v_leg2 = V(s_B, g_A)  (solve the task from there)
struct ReductionCandidate {
  EnvState target_state;
  int changed_object = -1;  // object index that differs from s_A
  Goal leg1_goal;           // move that object to its pose in s_B
  double v_leg1 = 0.0;
  double v_leg2 = 0.0;
  double composite = 0.0;
};

struct ReductionConfig {
  int top_k = 2;                 // candidates attempted per failed task
  int pool_per_object = 256;     // random-search placements per object
  double grid_resolution = 0.1;  // grid spacing for exhaustive enumeration
  CompositionOp op = CompositionOp::ProductNormalized;
  bool use_cem = false;
  int cem_population = 64;
  int cem_elites = 8;
  int cem_iterations = 10;

  void validate() const {
    if (top_k < 1) throw ConfigError("reduction top_k must be >= 1");
    if (pool_per_object < 1) throw ConfigError("reduction pool size must be >= 1");
  }
};

inline std::vector<int> perturbable_objects(const ScenarioSpec& spec, const Goal& goal) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(spec.objects.size()); ++j)
    if (j != goal.target_index - 1) out.push_back(j);
  return out;
}

// Rank reduction targets by the composed value over a candidate pool that
// perturbs exactly one non-target object per candidate. Pure value-function
// search: no environment interaction happens here.
inline std::vector<ReductionCandidate> find_reduction_target(
    const ScenarioSpec& spec, const EnvState& s_a, const Goal& g_a, const BatchValueFn& value_fn,
    const ReductionConfig& cfg, Rng& rng,
    const std::vector<EnvState>* fixed_pool = nullptr, int fixed_pool_object = -1) {
  cfg.validate();
  std::vector<ReductionCandidate> pool;
  if (fixed_pool) {
    for (const auto& st : *fixed_pool) {
      ReductionCandidate c;
      c.target_state = st;
      c.changed_object = fixed_pool_object;
      pool.push_back(std::move(c));
    }
  } else {
    for (int j : perturbable_objects(spec, g_a)) {
      auto states = sampled_candidate_states(spec, s_a, j, cfg.pool_per_object, rng);
      for (auto& st : states) {
        ReductionCandidate c;
        c.target_state = std::move(st);
        c.changed_object = j;
        pool.push_back(std::move(c));
      }
    }
  }
  if (pool.empty()) return {};

  std::vector<std::pair<EnvState, Goal>> leg1, leg2;
  leg1.reserve(pool.size());
  leg2.reserve(pool.size());
  for (auto& c : pool) {
    c.leg1_goal = Goal{c.target_state.objects[c.changed_object].pos, c.changed_object + 1};
    leg1.push_back({s_a, c.leg1_goal});
    leg2.push_back({c.target_state, g_a});
  }
  const std::vector<double> v1 = value_fn(leg1);
  const std::vector<double> v2 = value_fn(leg2);
  const std::vector<double> composite = compose_values(v1, v2, cfg.op);
  for (size_t i = 0; i < pool.size(); ++i) {
    pool[i].v_leg1 = v1[i];
    pool[i].v_leg2 = v2[i];
    pool[i].composite = composite[i];
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const ReductionCandidate& a, const ReductionCandidate& b) {
                     return a.composite > b.composite;
                   });
  return pool;
}

// Cross-entropy search over one object's pose box. Iteratively refits a
// Gaussian to the elite fraction; invalid placements score -inf. Returns
// the best candidate ever seen across all perturbable objects.
inline ReductionCandidate cem_search(const ScenarioSpec& spec, const EnvState& s_a,
                                     const Goal& g_a, const BatchValueFn& value_fn,
                                     const ReductionConfig& cfg, Rng& rng) {
  ReductionCandidate best;
  best.composite = -std::numeric_limits<double>::infinity();

  for (int j : perturbable_objects(spec, g_a)) {
    const Vec2 he = object_aabb(s_a.objects[j], spec.objects[j]).half();
    const Vec2 lo{spec.arena_min.x + he.x, spec.arena_min.y + he.y};
    const Vec2 hi{spec.arena_max.x - he.x, spec.arena_max.y - he.y};
    Vec2 mean{(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5};
    Vec2 stddev{(hi.x - lo.x) * 0.5, (hi.y - lo.y) * 0.5};

    for (int iter = 0; iter <= cfg.cem_iterations; ++iter) {
      std::vector<EnvState> states;
      std::vector<Vec2> poses;
      for (int resample = 0; resample < 2 && states.empty(); ++resample) {
        for (int k = 0; k < cfg.cem_population; ++k) {
          Vec2 p{clamp(mean.x + stddev.x * gaussian(rng), lo.x, hi.x),
                 clamp(mean.y + stddev.y * gaussian(rng), lo.y, hi.y)};
          EnvState cand = s_a;
          cand.objects[j].pos = p;
          cand.objects[j].vel = {0.0, 0.0};
          if (!state_valid(spec, cand)) continue;  // scored -inf, i.e. dropped
          states.push_back(std::move(cand));
          poses.push_back(p);
        }
      }
      if (states.empty())
        throw ValidationError("cem: all samples invalid after resampling");

      auto ranked = find_reduction_target(spec, s_a, g_a, value_fn, cfg, rng, &states, j);
      if (!ranked.empty() && ranked.front().composite > best.composite) best = ranked.front();
      if (iter == cfg.cem_iterations) break;

      // refit to the elite set
      const int elites = std::min<int>(cfg.cem_elites, static_cast<int>(ranked.size()));
      Vec2 m{0, 0}, s2{0, 0};
      for (int e = 0; e < elites; ++e) {
        const Vec2 p = ranked[e].target_state.objects[j].pos;
        m += p;
      }
      m = m * (1.0 / elites);
      for (int e = 0; e < elites; ++e) {
        const Vec2 p = ranked[e].target_state.objects[j].pos;
        s2.x += (p.x - m.x) * (p.x - m.x);
        s2.y += (p.y - m.y) * (p.y - m.y);
      }
      mean = m;
      stddev = {std::max(std::sqrt(s2.x / elites), 1e-3), std::max(std::sqrt(s2.y / elites), 1e-3)};
    }
  }
  return best;
}

enum class ReductionOutcome { Skipped, Leg1Failed, Leg2Failed, Success };

struct ReductionResult {
  ReductionOutcome outcome = ReductionOutcome::Skipped;
  Trajectory demo;  // spliced and relabeled to the original goal on success
  int leg1_steps = 0;
  int leg2_steps = 0;
  int env_steps() const { return leg1_steps + leg2_steps; }
};

using ActFn = std::function<GaussianPolicyOutput(const Tensor& obs)>;

// Execute the two-leg composite plan: reset to s_A, run toward the
// perturbed-object pose, then continue toward the original goal. On success
// the concatenated trajectory is relabeled to g_A with recomputed rewards
// and return-to-go.
inline ReductionResult execute_reduction(Maze2D& env, const Task& task,
                                         const ReductionCandidate& cand, const ActFn& act,
                                         const SigmaEstimator& sigma, double gamma) {
  ReductionResult res;
  if (!sigma.admits(cand.composite)) {
    res.outcome = ReductionOutcome::Skipped;
    return res;
  }

  const ObsLayout layout = env.spec().layout();
  std::vector<Step> steps;

  auto run_leg = [&](const Goal& goal, int* counter) {
    env.set_goal(goal);
    env.reset_step_count();
    bool success = false;
    while (true) {
      Tensor obs(1, layout.dim());
      observe_into(env.state(), goal, layout, obs.row(0));
      GaussianPolicyOutput out = act(obs);
      Transition tr = env.step({{out.action.at(0, 0), out.action.at(0, 1)}});
      ++*counter;
      Step s;
      s.state = tr.state;
      s.action = tr.action;
      s.pre_tanh = {out.pre_tanh.at(0, 0), out.pre_tanh.at(0, 1)};
      s.log_prob = out.log_prob.v[0];
      s.reward = tr.reward;
      s.next_state = tr.next_state;
      s.goal = goal;
      s.done = tr.done;
      s.success = tr.success;
      s.achieved = tr.achieved;
      steps.push_back(std::move(s));
      if (tr.done) {
        success = tr.success;
        break;
      }
    }
    return success;
  };

  // leg 1: reach the reduction target
  Task leg1 = task;
  leg1.goal = cand.leg1_goal;
  env.begin_task(leg1);
  if (!run_leg(cand.leg1_goal, &res.leg1_steps)) {
    res.outcome = ReductionOutcome::Leg1Failed;
    return res;
  }

  // leg 2: continue toward the original goal from the reached state
  if (!run_leg(task.goal, &res.leg2_steps)) {
    res.outcome = ReductionOutcome::Leg2Failed;
    return res;
  }

  // splice: relabel everything to the original goal, truncate at the first
  // success under it, recompute rewards and return-to-go
  Trajectory demo;
  for (auto& s : steps) {
    s.goal = task.goal;
    s.reward = sparse_reward(s.next_state, task.goal, env.spec().delta);
    s.success = s.reward == 1.0;
    s.achieved = achieved_position(s.next_state, task.goal);
    s.done = s.success;
    demo.steps.push_back(s);
    if (s.success) break;
  }
  if (!demo.steps.empty()) demo.steps.back().done = true;
  fill_return_to_go(demo, gamma);
  res.demo = std::move(demo);
  res.outcome = ReductionOutcome::Success;
  return res;
}

}  // namespace sir
