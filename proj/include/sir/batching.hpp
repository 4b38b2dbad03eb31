#pragma once

#include "sir/buffers.hpp"

namespace sir {

struct StepBatch {
  Tensor obs;         // B x obs_dim
  Tensor next_obs;    // B x obs_dim
  Tensor pre_tanh;    // B x 2
  Tensor actions;     // B x 2 (env space)
  Tensor old_logp;    // B x 1
  Tensor advantages;  // B x 1
  Tensor returns;     // B x 1
  Tensor rewards;     // B x 1
  Tensor dones;       // B x 1
  int size = 0;
};

inline StepBatch make_batch(const ObsLayout& layout, const std::vector<const Step*>& steps) {
  StepBatch b;
  b.size = static_cast<int>(steps.size());
  b.obs = Tensor(b.size, layout.dim());
  b.next_obs = Tensor(b.size, layout.dim());
  b.pre_tanh = Tensor(b.size, 2);
  b.actions = Tensor(b.size, 2);
  b.old_logp = Tensor(b.size, 1);
  b.advantages = Tensor(b.size, 1);
  b.returns = Tensor(b.size, 1);
  b.rewards = Tensor(b.size, 1);
  b.dones = Tensor(b.size, 1);
  for (int i = 0; i < b.size; ++i) {
    const Step& s = *steps[i];
    observe_into(s.state, s.goal, layout, b.obs.row(i));
    observe_into(s.next_state, s.goal, layout, b.next_obs.row(i));
    b.pre_tanh.at(i, 0) = s.pre_tanh.x;
    b.pre_tanh.at(i, 1) = s.pre_tanh.y;
    b.actions.at(i, 0) = s.action.x;
    b.actions.at(i, 1) = s.action.y;
    b.old_logp.v[i] = s.log_prob;
    b.advantages.v[i] = s.advantage;
    b.returns.v[i] = s.ret;
    b.rewards.v[i] = s.reward;
    b.dones.v[i] = s.done ? 1.0 : 0.0;
  }
  return b;
}

inline std::vector<const Step*> gather(const std::vector<const Step*>& all,
                                       const std::vector<int>& idx) {
  std::vector<const Step*> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace sir
