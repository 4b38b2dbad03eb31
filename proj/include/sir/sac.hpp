#pragma once

#include "sir/self_imitation.hpp"

namespace sir {

struct SACConfig {
  double gamma = 0.98;
  double tau = 0.005;
  double lr = 3e-4;
  int batch_size = 256;
  int replay_capacity = 100000;
  double her_ratio = 0.8;        // "future" strategy
  double alpha_priority = 0.6;   // priority exponent
  double beta_is = 0.4;          // importance-weight exponent, annealed to 1
  int warmup_steps = 1000;
  int update_every = 1;
  double beta_il = 0.1;          // off-policy imitation weight
  double init_alpha = 0.2;
  double max_grad_norm = 10.0;

  void validate() const {
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("sac tau must lie in (0,1]");
    if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("sac gamma must lie in (0,1]");
  }
};

// Hindsight relabeling, "future" strategy: a her_ratio fraction of the
// episode's transitions is copied with the goal replaced by a later
// achieved goal and the reward recomputed.
inline std::vector<Step> hindsight_relabel(const std::vector<Step>& episode, Rng& rng,
                                           double her_ratio, double delta, double gamma) {
  std::vector<Step> out;
  const int n = static_cast<int>(episode.size());
  for (int t = 0; t < n; ++t) {
    if (uniform(rng, 0.0, 1.0) >= her_ratio) continue;
    const int f = uniform_int(rng, t, n - 1);
    Step s = episode[t];
    s.goal.target_pos = episode[f].achieved;
    s.reward = sparse_reward(s.next_state, s.goal, delta);
    s.success = s.reward == 1.0;
    s.done = s.success;
    s.achieved = achieved_position(s.next_state, s.goal);
    // under the new goal the episode would have ended at step f
    s.ret = std::pow(gamma, static_cast<double>(f - t));
    out.push_back(std::move(s));
  }
  return out;
}

struct SACUpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double il_loss = 0.0;
};

// Soft actor-critic with twin sigmoid-headed critics, entropy temperature,
// prioritized replay over D^rl u D^il, and the off-policy SIR combination.
class SACLearner {
 public:
  GaussianPolicy policy;
  QNet q1, q2, q1_target, q2_target;
  ValueNet value_proxy;  // unused by SAC itself; kept for interface parity
  ParamSet alpha_params;
  Adam opt_pi, opt_q1, opt_q2, opt_alpha;
  SACConfig cfg;
  ObsLayout layout;
  double target_entropy;

  SACLearner(const ObsLayout& l, const NetConfig& net, const SACConfig& c, Rng& rng)
      : opt_pi(c.lr), opt_q1(c.lr), opt_q2(c.lr), opt_alpha(c.lr), cfg(c), layout(l),
        target_entropy(-2.0) {
    cfg.validate();
    policy = GaussianPolicy::create(l, net, 2, 1.0, /*state_dep_std=*/true, rng);
    q1 = QNet::create(l, net, 2, /*sigmoid_out=*/true, rng);
    q2 = QNet::create(l, net, 2, /*sigmoid_out=*/true, rng);
    Rng rng_t1(12345), rng_t2(54321);
    q1_target = QNet::create(l, net, 2, true, rng_t1);
    q2_target = QNet::create(l, net, 2, true, rng_t2);
    copy_params(q1_target.params, q1.params);
    copy_params(q2_target.params, q2.params);
    alpha_params.add("log_alpha", Tensor::full(1, 1, std::log(cfg.init_alpha)));
  }

  void set_act_limit(double limit) { policy.act_limit = limit; }
  double alpha() const { return std::exp(alpha_params.at(0).value.v[0]); }

  // soft state value under the current policy and target critics
  std::vector<double> soft_values(const Tensor& obs, Rng& rng) {
    GaussianPolicyOutput pi = policy.act(obs, /*deterministic=*/false, rng);
    Tensor qa = q1_target.values(obs, pi.action);
    Tensor qb = q2_target.values(obs, pi.action);
    std::vector<double> v(obs.rows);
    for (int i = 0; i < obs.rows; ++i)
      v[i] = std::min(qa.v[i], qb.v[i]) - alpha() * pi.log_prob.v[i];
    return v;
  }

  // |r + gamma V(s') - Q(s,a)| per transition
  std::vector<double> priorities(const std::vector<const Step*>& steps, Rng& rng) {
    if (steps.empty()) return {};
    StepBatch b = make_batch(layout, steps);
    std::vector<double> v_next = soft_values(b.next_obs, rng);
    Tensor qa = q1.values(b.obs, b.actions);
    Tensor qb = q2.values(b.obs, b.actions);
    std::vector<double> out(steps.size());
    for (size_t i = 0; i < steps.size(); ++i) {
      const double q = std::min(qa.v[i], qb.v[i]);
      out[i] = std::abs(b.rewards.v[i] + cfg.gamma * v_next[i] - q);
    }
    return out;
  }

  SACUpdateStats update(PrioritizedReplay& d_rl, PrioritizedReplay* d_il, double beta_is,
                        Rng& rng) {
    SACUpdateStats stats;
    const int n_rl = d_rl.size();
    const int n_il = d_il ? d_il->size() : 0;
    if (n_rl + n_il == 0) return stats;

    // union sample split proportional to buffer sizes
    int k_il = d_il && n_il > 0
                   ? static_cast<int>(std::lround(static_cast<double>(cfg.batch_size) * n_il /
                                                  (n_rl + n_il)))
                   : 0;
    k_il = std::min(k_il, cfg.batch_size);
    const int k_rl = cfg.batch_size - k_il;

    std::vector<const Step*> steps;
    std::vector<double> weights;
    std::vector<int> rl_slots, il_slots;
    if (k_rl > 0 && n_rl > 0) {
      auto batch = d_rl.sample(k_rl, beta_is, rng);
      for (size_t i = 0; i < batch.indices.size(); ++i) {
        steps.push_back(&d_rl.at(batch.indices[i]));
        weights.push_back(batch.weights[i]);
        rl_slots.push_back(batch.indices[i]);
      }
    }
    if (k_il > 0 && d_il) {
      auto batch = d_il->sample(k_il, beta_is, rng);
      for (size_t i = 0; i < batch.indices.size(); ++i) {
        steps.push_back(&d_il->at(batch.indices[i]));
        weights.push_back(batch.weights[i]);
        il_slots.push_back(batch.indices[i]);
      }
    }
    if (steps.empty()) return stats;
    StepBatch b = make_batch(layout, steps);
    const int bs = b.size;
    Tensor w_is(bs, 1);
    for (int i = 0; i < bs; ++i) w_is.v[i] = weights[i];

    // critic targets: y = r + gamma (1-done) (min Q_target(s',a') - alpha log pi)
    Tensor y(bs, 1);
    {
      GaussianPolicyOutput next_pi = policy.act(b.next_obs, false, rng);
      Tensor qa = q1_target.values(b.next_obs, next_pi.action);
      Tensor qb = q2_target.values(b.next_obs, next_pi.action);
      const double a = alpha();
      for (int i = 0; i < bs; ++i) {
        const double soft = std::min(qa.v[i], qb.v[i]) - a * next_pi.log_prob.v[i];
        double t = b.rewards.v[i] + cfg.gamma * (1.0 - b.dones.v[i]) * soft;
        y.v[i] = clamp(t, 0.0, 1.0);  // sigmoid critic range
      }
    }

    auto critic_pass = [&](QNet& q, Adam& opt) {
      q.params.zero_grads();
      Tape t;
      Tape::Ref qv = q.values_tape(t, b.obs, t.input(b.actions));
      Tape::Ref err = t.sub(qv, t.input(y));
      Tape::Ref loss = t.mean(t.mul(t.input(w_is), t.square(err)));
      t.backward(loss);
      clip_grad_norm(q.params, cfg.max_grad_norm);
      opt.step(q.params);
      return t.val(loss).v[0];
    };
    stats.critic_loss = 0.5 * (critic_pass(q1, opt_q1) + critic_pass(q2, opt_q2));

    // actor with the off-policy SIR combination (beta-weighted imitation)
    double mean_logp = 0.0;
    {
      Tensor xi(bs, 2);
      for (auto& x : xi.v) x = gaussian(rng);
      policy.params.zero_grads();
      q1.params.zero_grads();
      q2.params.zero_grads();
      Tape t;
      auto [action, logp] = policy.rsample_tape(t, b.obs, xi);
      Tape::Ref qa = q1.values_tape(t, b.obs, action);
      Tape::Ref qb = q2.values_tape(t, b.obs, action);
      Tape::Ref qmin = t.min_elem(qa, qb);
      const double a = alpha();
      Tape::Ref actor = t.mean(t.sub(t.scale(logp, a), qmin));

      std::optional<Tape::Ref> il_loss;
      if (cfg.beta_il > 0.0) {
        Tensor il_w = imitation_weights_from_returns(b);
        il_loss = imitation_loss_tape(t, policy, b.obs, b.pre_tanh, il_w);
      }
      Tape::Ref total = sir_combine_offpolicy(t, actor, il_loss, cfg.beta_il);
      t.backward(total);
      stats.actor_loss = t.val(actor).v[0];
      if (il_loss) stats.il_loss = t.val(*il_loss).v[0];
      mean_logp = 0.0;
      for (int i = 0; i < bs; ++i) mean_logp += t.val(logp).v[i];
      mean_logp /= bs;
      clip_grad_norm(policy.params, cfg.max_grad_norm);
      opt_pi.step(policy.params);
      // critic gradients from the actor pass are discarded; the critics
      // already took their step this round
      q1.params.zero_grads();
      q2.params.zero_grads();
    }

    // temperature toward the target entropy
    {
      alpha_params.zero_grads();
      Tape t;
      Tape::Ref log_alpha = t.param(alpha_params, 0);
      Tape::Ref loss =
          t.scale(t.mul(t.exp_(log_alpha),
                        t.constant(Tensor::full(1, 1, mean_logp + target_entropy))),
                  -1.0);
      t.backward(loss);
      opt_alpha.step(alpha_params);
      stats.alpha_loss = t.val(loss).v[0];
    }
    stats.alpha = alpha();

    // refresh priorities on the sampled transitions
    {
      std::vector<const Step*> rl_steps, il_steps;
      for (int s : rl_slots) rl_steps.push_back(&d_rl.at(s));
      auto ps = priorities(rl_steps, rng);
      for (size_t i = 0; i < rl_slots.size(); ++i) d_rl.set_priority(rl_slots[i], ps[i]);
      if (d_il && !il_slots.empty()) {
        for (int s : il_slots) il_steps.push_back(&d_il->at(s));
        auto ps2 = priorities(il_steps, rng);
        for (size_t i = 0; i < il_slots.size(); ++i) d_il->set_priority(il_slots[i], ps2[i]);
      }
    }

    polyak_update(q1_target.params, q1.params, cfg.tau);
    polyak_update(q2_target.params, q2.params, cfg.tau);
    return stats;
  }

 private:
  // max(0, R - V(s)) with V approximated by the min target critic at the
  // stored action; demos carry return-to-go, rollouts carry theirs too
  Tensor imitation_weights_from_returns(const StepBatch& b) {
    Tensor qa = q1_target.values(b.obs, b.actions);
    Tensor qb = q2_target.values(b.obs, b.actions);
    Tensor w(b.size, 1);
    for (int i = 0; i < b.size; ++i)
      w.v[i] = std::max(0.0, b.returns.v[i] - std::min(qa.v[i], qb.v[i]));
    return w;
  }
};

}  // namespace sir
