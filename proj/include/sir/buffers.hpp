#pragma once

#include <deque>

#include "sir/env.hpp"
#include "sir/tensor.hpp"

namespace sir {

struct Step {
  EnvState state;
  Vec2 action;    // env-space (squashed, clamped)
  Vec2 pre_tanh;  // pre-squash sample, kept for exact densities
  double log_prob = 0.0;
  double reward = 0.0;
  EnvState next_state;
  Goal goal;
  bool done = false;
  bool success = false;
  Vec2 achieved;
  double value = 0.0;      // V(s) at collection time (on-policy path)
  double advantage = 0.0;  // filled by GAE
  double ret = 0.0;        // return target / return-to-go
};

struct Trajectory {
  std::vector<Step> steps;
  int64_t born_iteration = 0;

  bool successful() const { return !steps.empty() && steps.back().success; }
  size_t size() const { return steps.size(); }
};

// Discounted return-to-go along a trajectory, written into each step.
inline void fill_return_to_go(Trajectory& traj, double gamma) {
  double run = 0.0;
  for (int i = static_cast<int>(traj.steps.size()) - 1; i >= 0; --i) {
    run = traj.steps[i].reward + gamma * run;
    traj.steps[i].ret = run;
  }
}

// Generalized advantage estimation over one episode segment. `bootstrap`
// is V(s_T) when the segment was cut before termination, 0 at a terminal.
inline void gae_advantages(const std::vector<double>& rewards, const std::vector<double>& values,
                           double bootstrap, double gamma, double lambda,
                           std::vector<double>* advantages, std::vector<double>* returns) {
  const int n = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != n) throw ConfigError("gae: values/rewards length mismatch");
  advantages->assign(n, 0.0);
  returns->assign(n, 0.0);
  double adv = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double next_v = (t == n - 1) ? bootstrap : values[t + 1];
    const double delta = rewards[t] + gamma * next_v - values[t];
    adv = delta + gamma * lambda * adv;
    (*advantages)[t] = adv;
    (*returns)[t] = adv + values[t];
  }
}

// On-policy store, grouped by episode segment; discarded every iteration.
struct RolloutBuffer {
  struct Segment {
    std::vector<Step> steps;
    double bootstrap = 0.0;  // V of the cut state; 0 when terminal
    bool terminal = true;
  };
  std::vector<Segment> segments;

  size_t transition_count() const {
    size_t n = 0;
    for (const auto& s : segments) n += s.steps.size();
    return n;
  }
  void clear() { segments.clear(); }

  void compute_gae(double gamma, double lambda) {
    std::vector<double> r, v, adv, ret;
    for (auto& seg : segments) {
      r.clear();
      v.clear();
      for (const auto& s : seg.steps) {
        r.push_back(s.reward);
        v.push_back(s.value);
      }
      gae_advantages(r, v, seg.terminal ? 0.0 : seg.bootstrap, gamma, lambda, &adv, &ret);
      for (size_t i = 0; i < seg.steps.size(); ++i) {
        seg.steps[i].advantage = adv[i];
        seg.steps[i].ret = ret[i];
      }
    }
  }

  // normalize advantages over the whole iteration batch
  void normalize_advantages() {
    double mean = 0.0;
    size_t n = transition_count();
    if (n == 0) return;
    for (const auto& seg : segments)
      for (const auto& s : seg.steps) mean += s.advantage;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& seg : segments)
      for (const auto& s : seg.steps) var += (s.advantage - mean) * (s.advantage - mean);
    const double std = std::sqrt(var / static_cast<double>(n)) + 1e-8;
    for (auto& seg : segments)
      for (auto& s : seg.steps) s.advantage = (s.advantage - mean) / std;
  }

  std::vector<const Step*> flatten() const {
    std::vector<const Step*> out;
    out.reserve(transition_count());
    for (const auto& seg : segments)
      for (const auto& s : seg.steps) out.push_back(&s);
    return out;
  }
};

// Proportional-priority sum tree over a fixed capacity.
class SumTree {
 public:
  explicit SumTree(int capacity) : cap_(1) {
    while (cap_ < capacity) cap_ <<= 1;
    tree_.assign(2 * cap_, 0.0);
  }
  void set(int i, double mass) {
    int node = cap_ + i;
    tree_[node] = mass;
    for (node >>= 1; node >= 1; node >>= 1) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
  }
  double total() const { return tree_[1]; }
  // index whose cumulative mass interval contains `u` in [0, total)
  int find(double u) const {
    int node = 1;
    while (node < cap_) {
      const double left = tree_[2 * node];
      if (u < left) {
        node = 2 * node;
      } else {
        u -= left;
        node = 2 * node + 1;
      }
    }
    return node - cap_;
  }

 private:
  int cap_;
  std::vector<double> tree_;
};

// FIFO ring replay with sampling probability proportional to p^alpha
// (p = |r + gamma V - Q| set by the learner).
class PrioritizedReplay {
 public:
  PrioritizedReplay(int capacity, double alpha)
      : capacity_(capacity), alpha_(alpha), tree_(capacity) {
    if (capacity <= 0) throw ConfigError("replay capacity must be positive");
    items_.reserve(capacity);
  }

  int size() const { return static_cast<int>(items_.size()); }
  int capacity() const { return capacity_; }
  double alpha() const { return alpha_; }

  // FIFO: overwrites the oldest slot once full
  int insert(Step step, double priority) {
    int slot;
    if (size() < capacity_) {
      slot = static_cast<int>(items_.size());
      items_.push_back(std::move(step));
    } else {
      slot = write_;
      items_[slot] = std::move(step);
    }
    write_ = (slot + 1) % capacity_;
    priorities_.resize(items_.size(), 0.0);
    set_priority(slot, priority);
    return slot;
  }

  void set_priority(int slot, double p) {
    if (!std::isfinite(p) || p < 0.0) p = 0.0;
    priorities_[slot] = p;
    tree_.set(slot, std::pow(p + kPriorityFloor, alpha_));
  }
  double priority(int slot) const { return priorities_[slot]; }
  const Step& at(int slot) const { return items_[slot]; }

  struct Batch {
    std::vector<int> indices;
    std::vector<double> weights;  // importance weights, max-normalized
  };

  // beta_is is the importance-sampling exponent (annealed externally)
  Batch sample(int batch_size, double beta_is, Rng& rng) const {
    if (items_.empty()) throw ConfigError("sampling from an empty replay buffer");
    Batch b;
    b.indices.reserve(batch_size);
    b.weights.reserve(batch_size);
    const double total = tree_.total();
    const double n = static_cast<double>(size());
    double wmax = 0.0;
    for (int k = 0; k < batch_size; ++k) {
      const double u = uniform(rng, 0.0, total);
      int idx = tree_.find(std::min(u, std::nexttoward(total, 0.0)));
      if (idx >= size()) idx = size() - 1;
      b.indices.push_back(idx);
      const double mass = std::pow(priorities_[idx] + kPriorityFloor, alpha_);
      const double prob = mass / total;
      const double w = std::pow(n * prob, -beta_is);
      b.weights.push_back(w);
      wmax = std::max(wmax, w);
    }
    if (wmax > 0.0)
      for (auto& w : b.weights) w /= wmax;
    return b;
  }

  static constexpr double kPriorityFloor = 1e-6;

 private:
  int capacity_;
  double alpha_;
  int write_ = 0;
  std::vector<Step> items_;
  std::vector<double> priorities_;
  SumTree tree_;
};

// Demonstration store D^il. Every trajectory must end in success; entries
// expire after a fixed number of iterations ("demo reuse").
class DemoBuffer {
 public:
  explicit DemoBuffer(int64_t max_age_iterations) : max_age_(max_age_iterations) {
    if (max_age_ < 1) throw ConfigError("demo max age must be at least 1");
  }

  void insert(Trajectory traj, int64_t iteration) {
    if (!traj.successful())
      throw ValidationError("demo buffer only stores trajectories that end in success");
    traj.born_iteration = iteration;
    count_ += traj.steps.size();
    entries_.push_back(std::move(traj));
  }

  // drop trajectories past their reuse window
  void evict(int64_t current_iteration) {
    while (!entries_.empty() && current_iteration >= entries_.front().born_iteration + max_age_) {
      count_ -= entries_.front().steps.size();
      entries_.pop_front();
    }
  }

  size_t trajectory_count() const { return entries_.size(); }
  size_t transition_count() const { return count_; }
  bool empty() const { return entries_.empty(); }
  int64_t max_age() const { return max_age_; }
  const std::deque<Trajectory>& trajectories() const { return entries_; }

  std::vector<const Step*> flatten() const {
    std::vector<const Step*> out;
    out.reserve(count_);
    for (const auto& t : entries_) {
      if (!t.successful())
        throw ValidationError("demo buffer invariant violated: unsuccessful trajectory");
      for (const auto& s : t.steps) out.push_back(&s);
    }
    return out;
  }

 private:
  int64_t max_age_;
  std::deque<Trajectory> entries_;
  size_t count_ = 0;
};

}  // namespace sir
