#pragma once

#include "sir/batching.hpp"
#include "sir/policy.hpp"

namespace sir {

// Clipped imitation advantage max(0, R - V(s,g)) per sample; treated as a
// constant weight in the loss (no gradient through V).
inline Tensor imitation_weights(const ValueNet& value, const Tensor& obs, const Tensor& rtg) {
  Tensor v = value.values(obs);
  Tensor w(rtg.rows, 1);
  for (int i = 0; i < rtg.rows; ++i) w.v[i] = std::max(0.0, rtg.v[i] - v.v[i]);
  return w;
}

// Weighted imitation objective: minimize -E[log pi(a|s,g) * A+].
inline Tape::Ref imitation_loss_tape(Tape& t, GaussianPolicy& policy, const Tensor& obs,
                                     const Tensor& pre_tanh, const Tensor& weights) {
  Tape::Ref logp = policy.log_prob_tape(t, obs, pre_tanh);
  return t.scale(t.mean(t.mul(logp, t.input(weights))), -1.0);
}

// On-policy combination: imitation applies to demonstrations only, and the
// two losses mix per-instance:
//   (|Drl| L_actor + |Dil| L_il) / |Drl u Dil|
inline Tape::Ref sir_combine_onpolicy(Tape& t, std::optional<Tape::Ref> actor_loss,
                                      std::optional<Tape::Ref> il_loss, size_t n_rl, size_t n_il) {
  if (n_rl + n_il == 0 || (!actor_loss && !il_loss))
    throw ConfigError("sir on-policy combination needs at least one non-empty term");
  const double denom = static_cast<double>(n_rl + n_il);
  std::optional<Tape::Ref> total;
  if (actor_loss && n_rl > 0) total = t.scale(*actor_loss, static_cast<double>(n_rl) / denom);
  if (il_loss && n_il > 0) {
    Tape::Ref term = t.scale(*il_loss, static_cast<double>(n_il) / denom);
    total = total ? t.add(*total, term) : term;
  }
  if (!total) throw ConfigError("sir on-policy combination is empty");
  return *total;
}

// Off-policy combination: L_actor(union) + beta * L_il(union).
inline Tape::Ref sir_combine_offpolicy(Tape& t, Tape::Ref actor_loss,
                                       std::optional<Tape::Ref> il_loss, double beta) {
  if (!il_loss || beta == 0.0) return actor_loss;
  return t.add(actor_loss, t.scale(*il_loss, beta));
}

// Reduction gate threshold. Off-policy uses a static value; on-policy keeps
// an exponential running average of the composite values of the reduction
// targets that were actually attempted.
struct SigmaEstimator {
  enum class Mode { Static, RunningAverage };
  Mode mode = Mode::Static;
  double value = 0.7;
  double ema_coefficient = 0.01;
  double upper_gate = 1.0;  // discard targets above this during warm-up

  static SigmaEstimator fixed(double sigma, double upper = 1.0) {
    SigmaEstimator e;
    e.mode = Mode::Static;
    e.value = sigma;
    e.upper_gate = upper;
    return e;
  }
  static SigmaEstimator running(double initial, double coefficient, double upper = 1.0) {
    SigmaEstimator e;
    e.mode = Mode::RunningAverage;
    e.value = initial;
    e.ema_coefficient = coefficient;
    e.upper_gate = upper;
    return e;
  }

  void update(const std::vector<double>& selected_composites) {
    if (mode == Mode::Static || selected_composites.empty()) return;
    double mean = 0.0;
    for (double c : selected_composites) mean += c;
    mean /= static_cast<double>(selected_composites.size());
    value = (1.0 - ema_coefficient) * value + ema_coefficient * mean;
  }

  bool admits(double composite) const { return composite > value && composite <= upper_gate; }
};

}  // namespace sir
