#pragma once

#include <numeric>

#include "sir/self_imitation.hpp"

namespace sir {

struct PPOConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 10;
  int minibatches = 32;
  int steps_per_iter = 8192;
  int workers = 16;  // parallel environment instances
  double lr = 3e-4;
  double ent_coef = 0.003;
  double max_grad_norm = 1.0;

  void validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("ppo gamma must lie in (0,1]");
    if (minibatches < 1 || epochs < 1) throw ConfigError("ppo epochs/minibatches must be >= 1");
  }
};

// Clipped-ratio surrogate: -mean(min(r A, clamp(r, 1-c, 1+c) A)).
inline Tape::Ref ppo_actor_loss_tape(Tape& t, GaussianPolicy& policy, const Tensor& obs,
                                     const Tensor& pre_tanh, const Tensor& old_logp,
                                     const Tensor& advantages, double clip_eps) {
  Tape::Ref logp = policy.log_prob_tape(t, obs, pre_tanh);
  Tape::Ref ratio = t.exp_(t.sub(logp, t.input(old_logp)));
  Tape::Ref adv = t.input(advantages);
  Tape::Ref unclipped = t.mul(ratio, adv);
  Tape::Ref clipped = t.mul(t.clamp_(ratio, 1.0 - clip_eps, 1.0 + clip_eps), adv);
  return t.scale(t.mean(t.min_elem(unclipped, clipped)), -1.0);
}

inline Tape::Ref value_loss_tape(Tape& t, ValueNet& value, const Tensor& obs,
                                 const Tensor& targets) {
  Tape::Ref v = value.values_tape(t, obs);
  return t.mean(t.square(t.sub(v, t.input(targets))));
}

struct PPOUpdateStats {
  double actor_loss = 0.0;
  double il_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int minibatches = 0;
};

// One PPO iteration over D^rl with the on-policy SIR combination over D^il.
// The critic trains on the union of both datasets.
class PPOLearner {
 public:
  GaussianPolicy policy;
  ValueNet value;
  Adam opt_pi, opt_v;
  PPOConfig cfg;
  ObsLayout layout;

  PPOLearner(const ObsLayout& l, const NetConfig& net, const PPOConfig& c, Rng& rng)
      : opt_pi(c.lr), opt_v(c.lr), cfg(c), layout(l) {
    cfg.validate();
    policy = GaussianPolicy::create(l, net, 2, 1.0, /*state_dep_std=*/false, rng);
    value = ValueNet::create(l, net, /*sigmoid_out=*/false, rng);
  }

  void set_act_limit(double limit) { policy.act_limit = limit; }

  PPOUpdateStats update(RolloutBuffer& d_rl, const DemoBuffer& d_il, Rng& rng) {
    d_rl.compute_gae(cfg.gamma, cfg.gae_lambda);
    d_rl.normalize_advantages();

    auto rl_steps = d_rl.flatten();
    auto il_steps = d_il.flatten();
    const size_t n_rl = rl_steps.size();
    const size_t n_il = il_steps.size();
    if (n_rl == 0) throw ConfigError("ppo update without rollout data");

    std::vector<int> order(n_rl);
    std::iota(order.begin(), order.end(), 0);
    const int mb_size = std::max<int>(1, static_cast<int>(n_rl) / cfg.minibatches);
    // demo minibatch sized so each pass covers D^il about once per epoch
    const int il_mb_size =
        n_il == 0 ? 0 : std::max<int>(1, static_cast<int>(n_il) / cfg.minibatches);

    PPOUpdateStats stats;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (int start = 0; start + mb_size <= static_cast<int>(n_rl); start += mb_size) {
        std::vector<int> idx(order.begin() + start, order.begin() + start + mb_size);
        StepBatch rl = make_batch(layout, gather(rl_steps, idx));

        StepBatch il;
        Tensor il_weights;
        if (n_il > 0) {
          std::vector<int> il_idx(il_mb_size);
          for (auto& k : il_idx) k = uniform_int(rng, 0, static_cast<int>(n_il) - 1);
          il = make_batch(layout, gather(il_steps, il_idx));
          il_weights = imitation_weights(value, il.obs, il.returns);
        }

        // actor + imitation combination
        {
          policy.params.zero_grads();
          Tape t;
          Tape::Ref actor =
              ppo_actor_loss_tape(t, policy, rl.obs, rl.pre_tanh, rl.old_logp, rl.advantages, cfg.clip);
          std::optional<Tape::Ref> il_loss;
          if (n_il > 0) il_loss = imitation_loss_tape(t, policy, il.obs, il.pre_tanh, il_weights);
          Tape::Ref combined = sir_combine_onpolicy(t, actor, il_loss, n_rl, n_il);
          Tape::Ref entropy = policy.entropy_tape(t, rl.obs);
          Tape::Ref total = t.sub(combined, t.scale(entropy, cfg.ent_coef));
          t.backward(total);
          stats.actor_loss += t.val(actor).v[0];
          if (il_loss) stats.il_loss += t.val(*il_loss).v[0];
          stats.entropy += t.val(entropy).v[0];
          clip_grad_norm(policy.params, cfg.max_grad_norm);
          opt_pi.step(policy.params);
        }

        // critic on the union batch: rollout returns plus demo return-to-go
        {
          value.params.zero_grads();
          Tensor obs_union(rl.size + il.size, layout.dim());
          Tensor tgt_union(rl.size + il.size, 1);
          for (int r = 0; r < rl.size; ++r) {
            std::memcpy(obs_union.row(r), rl.obs.row(r), sizeof(double) * layout.dim());
            tgt_union.v[r] = rl.returns.v[r];
          }
          for (int r = 0; r < il.size; ++r) {
            std::memcpy(obs_union.row(rl.size + r), il.obs.row(r), sizeof(double) * layout.dim());
            tgt_union.v[rl.size + r] = il.returns.v[r];
          }
          Tape t;
          Tape::Ref loss = value_loss_tape(t, value, obs_union, tgt_union);
          t.backward(loss);
          stats.value_loss += t.val(loss).v[0];
          clip_grad_norm(value.params, cfg.max_grad_norm);
          opt_v.step(value.params);
        }
        ++stats.minibatches;
      }
    }
    if (stats.minibatches > 0) {
      stats.actor_loss /= stats.minibatches;
      stats.il_loss /= stats.minibatches;
      stats.value_loss /= stats.minibatches;
      stats.entropy /= stats.minibatches;
    }
    return stats;
  }
};

}  // namespace sir
