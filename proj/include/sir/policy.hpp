#pragma once

#include <optional>

#include "sir/env.hpp"
#include "sir/nn.hpp"

namespace sir {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;
constexpr double kSquashEps = 1e-12;

struct NetConfig {
  int hidden = 256;  // hidden width, two hidden layers
  int embed = 64;    // attention embedding width
};

// Observation batch split into the attention blocks:
//   self = [agent pose/vel, achieved block, desired block]
//   obj_i = [object block, is-target flag]
struct SplitObs {
  Tensor self_block;
  std::vector<Tensor> obj_blocks;
};

inline int self_block_dim(const ObsLayout& l) { return 4 + 2 * l.goal_block_len(); }
inline int obj_block_dim() { return ObsLayout::kObjLen + 1; }

inline SplitObs split_obs(const ObsLayout& layout, const Tensor& obs) {
  if (obs.cols != layout.dim()) throw ConfigError("observation layout mismatch");
  SplitObs out;
  const int b = obs.rows;
  out.self_block = Tensor(b, self_block_dim(layout));
  for (int r = 0; r < b; ++r) {
    const double* src = obs.row(r);
    double* dst = out.self_block.row(r);
    std::memcpy(dst, src + layout.agent_offset(), sizeof(double) * 4);
    std::memcpy(dst + 4, src + layout.achieved_offset(),
                sizeof(double) * layout.goal_block_len());
    std::memcpy(dst + 4 + layout.goal_block_len(), src + layout.desired_offset(),
                sizeof(double) * layout.goal_block_len());
  }
  for (int i = 0; i < layout.n_objects; ++i) {
    Tensor blk(b, obj_block_dim());
    for (int r = 0; r < b; ++r) {
      const double* src = obs.row(r);
      double* dst = blk.row(r);
      std::memcpy(dst, src + layout.object_offset(i), sizeof(double) * ObsLayout::kObjLen);
      dst[ObsLayout::kObjLen] = src[layout.desired_offset() + 2 + (i + 1)];
    }
    out.obj_blocks.push_back(std::move(blk));
  }
  return out;
}

// Feature trunk: attention encoder when the scenario has objects, plain MLP
// otherwise. `extra` columns (e.g. actions for Q nets) are appended to the
// self block.
struct Trunk {
  ObsLayout layout;
  bool attention = false;
  int extra_cols = 0;
  int out_dim = 0;
  Mlp mlp;
  AttentionEncoder enc;

  static Trunk create(ParamSet& ps, const std::string& prefix, const ObsLayout& layout,
                      int extra_cols, const NetConfig& cfg, Act act, Rng& rng) {
    Trunk t;
    t.layout = layout;
    t.extra_cols = extra_cols;
    t.attention = layout.n_objects > 0;
    t.out_dim = cfg.hidden;
    if (t.attention) {
      t.enc = AttentionEncoder::create(ps, prefix, self_block_dim(layout) + extra_cols,
                                       obj_block_dim(), {cfg.hidden, cfg.embed},
                                       {cfg.hidden, cfg.embed}, {cfg.hidden}, cfg.hidden, act, rng);
    } else {
      t.mlp = Mlp::create(ps, prefix, {layout.dim() + extra_cols, cfg.hidden, cfg.hidden}, act,
                          act, rng);
    }
    return t;
  }

  Tensor forward(const ParamSet& ps, const Tensor& obs, const Tensor* extra) const {
    if (!attention) {
      if (!extra) return mlp.forward(ps, obs);
      Tensor in(obs.rows, obs.cols + extra->cols);
      for (int r = 0; r < obs.rows; ++r) {
        std::memcpy(in.row(r), obs.row(r), sizeof(double) * obs.cols);
        std::memcpy(in.row(r) + obs.cols, extra->row(r), sizeof(double) * extra->cols);
      }
      return mlp.forward(ps, in);
    }
    SplitObs s = split_obs(layout, obs);
    Tensor self_in = std::move(s.self_block);
    if (extra) {
      Tensor widened(self_in.rows, self_in.cols + extra->cols);
      for (int r = 0; r < self_in.rows; ++r) {
        std::memcpy(widened.row(r), self_in.row(r), sizeof(double) * self_in.cols);
        std::memcpy(widened.row(r) + self_in.cols, extra->row(r), sizeof(double) * extra->cols);
      }
      self_in = std::move(widened);
    }
    return enc.forward(ps, self_in, s.obj_blocks);
  }

  // tape path; extra may carry gradients (SAC actor through Q input)
  Tape::Ref forward(Tape& t, ParamSet& ps, const Tensor& obs,
                    std::optional<Tape::Ref> extra) const {
    if (!attention) {
      Tape::Ref in = t.input(obs);
      if (extra) in = t.concat_cols({in, *extra});
      return mlp.forward(t, ps, in);
    }
    SplitObs s = split_obs(layout, obs);
    Tape::Ref self_in = t.constant(std::move(s.self_block));
    if (extra) self_in = t.concat_cols({self_in, *extra});
    std::vector<Tape::Ref> objs;
    for (auto& blk : s.obj_blocks) objs.push_back(t.constant(std::move(blk)));
    return enc.forward(t, ps, self_in, objs);
  }
};

// One policy head evaluation.
struct GaussianPolicyOutput {
  Tensor mean;      // pre-squash mean, B x A
  Tensor log_std;   // B x A, clamped to [-5, 2]
  Tensor pre_tanh;  // sampled (or mean) pre-squash action
  Tensor action;    // squashed and scaled to the force limit
  Tensor log_prob;  // B x 1, includes the tanh change-of-variables term
};

// Goal-conditioned squashed-Gaussian policy. PPO uses a state-independent
// log-std parameter; SAC uses a state-dependent head.
class GaussianPolicy {
 public:
  ParamSet params;
  Trunk trunk;
  Mlp mean_head;
  Mlp std_head;
  int log_std_slot = -1;
  bool state_dep_std = false;
  int act_dim = 2;
  double act_limit = 1.0;

  GaussianPolicy() = default;
  GaussianPolicy(const GaussianPolicy&) = delete;
  GaussianPolicy& operator=(const GaussianPolicy&) = delete;
  GaussianPolicy(GaussianPolicy&&) = default;
  GaussianPolicy& operator=(GaussianPolicy&&) = default;

  static GaussianPolicy create(const ObsLayout& layout, const NetConfig& cfg, int act_dim,
                               double act_limit, bool state_dep_std, Rng& rng) {
    GaussianPolicy p;
    p.act_dim = act_dim;
    p.act_limit = act_limit;
    p.state_dep_std = state_dep_std;
    p.trunk = Trunk::create(p.params, "pi.trunk", layout, 0, cfg, Act::Tanh, rng);
    p.mean_head =
        Mlp::create(p.params, "pi.mean", {cfg.hidden, act_dim}, Act::Tanh, Act::None, rng, 0.1);
    if (state_dep_std) {
      p.std_head =
          Mlp::create(p.params, "pi.logstd", {cfg.hidden, act_dim}, Act::Tanh, Act::None, rng, 0.1);
    } else {
      p.log_std_slot = p.params.add("pi.logstd", Tensor::full(1, act_dim, -0.7));
    }
    return p;
  }

  GaussianPolicyOutput act(const Tensor& obs, bool deterministic, Rng& rng) const {
    GaussianPolicyOutput out;
    Tensor feat = trunk.forward(params, obs, nullptr);
    out.mean = mean_head.forward(params, feat);
    out.log_std = Tensor(obs.rows, act_dim);
    if (state_dep_std) {
      Tensor ls = std_head.forward(params, feat);
      for (int i = 0; i < ls.size(); ++i) out.log_std.v[i] = clamp(ls.v[i], kLogStdMin, kLogStdMax);
    } else {
      const Tensor& ls = params.at(log_std_slot).value;
      for (int r = 0; r < obs.rows; ++r)
        for (int j = 0; j < act_dim; ++j)
          out.log_std.at(r, j) = clamp(ls.at(0, j), kLogStdMin, kLogStdMax);
    }
    out.pre_tanh = out.mean;
    if (!deterministic) {
      for (int r = 0; r < obs.rows; ++r)
        for (int j = 0; j < act_dim; ++j)
          out.pre_tanh.at(r, j) += std::exp(out.log_std.at(r, j)) * gaussian(rng);
    }
    out.action = Tensor(obs.rows, act_dim);
    for (int i = 0; i < out.action.size(); ++i)
      out.action.v[i] = act_limit * std::tanh(out.pre_tanh.v[i]);
    out.log_prob = log_prob_of(out.mean, out.log_std, out.pre_tanh);
    return out;
  }

  // density of recorded pre-squash actions under the current parameters
  Tensor log_prob(const Tensor& obs, const Tensor& pre_tanh) const {
    Tensor feat = trunk.forward(params, obs, nullptr);
    Tensor mean = mean_head.forward(params, feat);
    Tensor log_std(obs.rows, act_dim);
    if (state_dep_std) {
      Tensor ls = std_head.forward(params, feat);
      for (int i = 0; i < ls.size(); ++i) log_std.v[i] = clamp(ls.v[i], kLogStdMin, kLogStdMax);
    } else {
      const Tensor& ls = params.at(log_std_slot).value;
      for (int r = 0; r < obs.rows; ++r)
        for (int j = 0; j < act_dim; ++j) log_std.at(r, j) = clamp(ls.at(0, j), kLogStdMin, kLogStdMax);
    }
    return log_prob_of(mean, log_std, pre_tanh);
  }

  Tensor log_prob_of(const Tensor& mean, const Tensor& log_std, const Tensor& pre_tanh) const {
    Tensor lp(mean.rows, 1);
    for (int r = 0; r < mean.rows; ++r) {
      double s = 0.0;
      for (int j = 0; j < act_dim; ++j) {
        const double sigma = std::exp(log_std.at(r, j));
        const double z = (pre_tanh.at(r, j) - mean.at(r, j)) / sigma;
        s += -0.5 * z * z - log_std.at(r, j) - 0.5 * std::log(2.0 * M_PI);
        const double th = std::tanh(pre_tanh.at(r, j));
        s -= std::log(act_limit * (1.0 - th * th) + kSquashEps);
      }
      lp.v[r] = s;
    }
    return lp;
  }

  // tape path: log-probs of recorded pre-squash actions, B x 1
  Tape::Ref log_prob_tape(Tape& t, const Tensor& obs, const Tensor& pre_tanh) {
    Tape::Ref feat = trunk.forward(t, params, obs, std::nullopt);
    Tape::Ref mean = mean_head.forward(t, params, feat);
    Tape::Ref log_std = log_std_tape(t, feat, obs.rows);
    Tape::Ref u = t.input(pre_tanh);
    Tape::Ref z = t.mul(t.sub(u, mean), t.exp_(t.scale(log_std, -1.0)));
    Tape::Ref quad = t.scale(t.square(z), -0.5);
    Tape::Ref norm = t.add_scalar(t.scale(log_std, -1.0), -0.5 * std::log(2.0 * M_PI));
    // tanh correction is constant in the parameters but kept for exactness
    Tensor corr(obs.rows, act_dim);
    for (int r = 0; r < obs.rows; ++r)
      for (int j = 0; j < act_dim; ++j) {
        const double th = std::tanh(pre_tanh.at(r, j));
        corr.at(r, j) = -std::log(act_limit * (1.0 - th * th) + kSquashEps);
      }
    Tape::Ref total = t.add(t.add(quad, norm), t.constant(std::move(corr)));
    return t.rowsum(total);
  }

  // reparameterized sample for SAC: action (scaled) and its log-prob
  std::pair<Tape::Ref, Tape::Ref> rsample_tape(Tape& t, const Tensor& obs, const Tensor& xi) {
    Tape::Ref feat = trunk.forward(t, params, obs, std::nullopt);
    Tape::Ref mean = mean_head.forward(t, params, feat);
    Tape::Ref log_std = log_std_tape(t, feat, obs.rows);
    Tape::Ref sigma = t.exp_(log_std);
    Tape::Ref u = t.add(mean, t.mul(sigma, t.input(xi)));
    Tape::Ref tanh_u = t.tanh_(u);
    Tape::Ref action = t.scale(tanh_u, act_limit);
    Tape::Ref z = t.mul(t.sub(u, mean), t.exp_(t.scale(log_std, -1.0)));
    Tape::Ref gauss = t.add_scalar(t.add(t.scale(t.square(z), -0.5), t.scale(log_std, -1.0)),
                                   -0.5 * std::log(2.0 * M_PI));
    // - log(L (1 - tanh(u)^2) + eps), differentiable through u
    Tape::Ref jac = t.log_(t.add_scalar(t.scale(t.sub(t.constant(Tensor::full(obs.rows, act_dim, 1.0)),
                                                      t.square(tanh_u)),
                                                act_limit),
                                        kSquashEps));
    Tape::Ref logp = t.rowsum(t.sub(gauss, jac));
    return {action, logp};
  }

  // mean over the batch of the Gaussian entropy (pre-squash proxy)
  Tape::Ref entropy_tape(Tape& t, const Tensor& obs) {
    if (!state_dep_std) {
      Tape::Ref ls = t.clamp_(t.param(params, log_std_slot), kLogStdMin, kLogStdMax);
      return t.add_scalar(t.sum(ls), 0.5 * act_dim * std::log(2.0 * M_PI * M_E));
    }
    Tape::Ref feat = trunk.forward(t, params, obs, std::nullopt);
    Tape::Ref ls = t.clamp_(std_head.forward(t, params, feat), kLogStdMin, kLogStdMax);
    return t.add_scalar(t.mean(t.rowsum(ls)), 0.5 * act_dim * std::log(2.0 * M_PI * M_E));
  }

 private:
  Tape::Ref log_std_tape(Tape& t, Tape::Ref feat, int rows) {
    if (state_dep_std)
      return t.clamp_(std_head.forward(t, params, feat), kLogStdMin, kLogStdMax);
    return t.expand_rows(t.clamp_(t.param(params, log_std_slot), kLogStdMin, kLogStdMax), rows);
  }
};

// State value head V(s, g). PPO keeps a linear output; SAC-style nets use
// the sigmoid head so values stay comparable to sparse returns in [0, 1].
class ValueNet {
 public:
  ParamSet params;
  Trunk trunk;
  Mlp head;

  ValueNet() = default;
  ValueNet(const ValueNet&) = delete;
  ValueNet& operator=(const ValueNet&) = delete;
  ValueNet(ValueNet&&) = default;
  ValueNet& operator=(ValueNet&&) = default;

  static ValueNet create(const ObsLayout& layout, const NetConfig& cfg, bool sigmoid_out,
                         Rng& rng) {
    ValueNet v;
    v.trunk = Trunk::create(v.params, "v.trunk", layout, 0, cfg, Act::Relu, rng);
    v.head = Mlp::create(v.params, "v.head", {cfg.hidden, 1}, Act::Relu,
                         sigmoid_out ? Act::Sigmoid : Act::None, rng);
    return v;
  }

  Tensor values(const Tensor& obs) const {
    return head.forward(params, trunk.forward(params, obs, nullptr));
  }
  double value(const Tensor& single_obs) const { return values(single_obs).v[0]; }

  Tape::Ref values_tape(Tape& t, const Tensor& obs) {
    return head.forward(t, params, trunk.forward(t, params, obs, std::nullopt));
  }
};

// Action value head Q(s, a, g); the action joins the self block.
class QNet {
 public:
  ParamSet params;
  Trunk trunk;
  Mlp head;
  int act_dim = 2;

  QNet() = default;
  QNet(const QNet&) = delete;
  QNet& operator=(const QNet&) = delete;
  QNet(QNet&&) = default;
  QNet& operator=(QNet&&) = default;

  static QNet create(const ObsLayout& layout, const NetConfig& cfg, int act_dim, bool sigmoid_out,
                     Rng& rng) {
    QNet q;
    q.act_dim = act_dim;
    q.trunk = Trunk::create(q.params, "q.trunk", layout, act_dim, cfg, Act::Relu, rng);
    q.head = Mlp::create(q.params, "q.head", {cfg.hidden, 1}, Act::Relu,
                         sigmoid_out ? Act::Sigmoid : Act::None, rng);
    return q;
  }

  Tensor values(const Tensor& obs, const Tensor& act) const {
    return head.forward(params, trunk.forward(params, obs, &act));
  }

  Tape::Ref values_tape(Tape& t, const Tensor& obs, Tape::Ref act) {
    return head.forward(t, params, trunk.forward(t, params, obs, act));
  }
};

inline void copy_params(ParamSet& dst, const ParamSet& src) {
  if (dst.count() != src.count()) throw ConfigError("param set size mismatch");
  for (size_t i = 0; i < src.count(); ++i)
    dst.at(static_cast<int>(i)).value = src.at(static_cast<int>(i)).value;
}

inline void polyak_update(ParamSet& target, const ParamSet& online, double tau) {
  if (target.count() != online.count()) throw ConfigError("param set size mismatch");
  for (size_t i = 0; i < online.count(); ++i) {
    Tensor& t = target.at(static_cast<int>(i)).value;
    const Tensor& o = online.at(static_cast<int>(i)).value;
    for (int k = 0; k < t.size(); ++k) t.v[k] = (1.0 - tau) * t.v[k] + tau * o.v[k];
  }
}

}  // namespace sir
