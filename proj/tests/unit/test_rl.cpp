#include <catch2/catch_amalgamated.hpp>

#include "sir/ppo.hpp"
#include "sir/sac.hpp"
#include "sir/tasks.hpp"

using namespace sir;

TEST_CASE("gae single step with gamma=lambda=1 is the td residual", "[rl][gae]") {
  std::vector<double> adv, ret;
  // one-step cut segment bootstrapped with V(s') = 0.4
  gae_advantages({0.2}, {0.9}, 0.4, 1.0, 1.0, &adv, &ret);
  REQUIRE(adv[0] == Catch::Approx(0.2 + 0.4 - 0.9));
  REQUIRE(ret[0] == Catch::Approx(adv[0] + 0.9));
}

TEST_CASE("gae with lambda=0 reduces to one-step td errors", "[rl][gae]") {
  Rng rng(1);
  std::vector<double> r(6), v(6);
  for (int i = 0; i < 6; ++i) {
    r[i] = uniform(rng, -1, 1);
    v[i] = uniform(rng, -1, 1);
  }
  const double boot = 0.3, gamma = 0.97;
  std::vector<double> adv, ret;
  gae_advantages(r, v, boot, gamma, 0.0, &adv, &ret);
  for (int t = 0; t < 6; ++t) {
    const double next_v = t == 5 ? boot : v[t + 1];
    REQUIRE(adv[t] == Catch::Approx(r[t] + gamma * next_v - v[t]).margin(1e-12));
  }
}

TEST_CASE("gae matches the brute-force weighted sum oracle", "[rl][gae]") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    std::vector<double> r(n), v(n);
    for (int i = 0; i < n; ++i) {
      r[i] = uniform(rng, -1, 1);
      v[i] = uniform(rng, -1, 1);
    }
    const double gamma = uniform(rng, 0.5, 1.0), lambda = uniform(rng, 0.0, 1.0);
    const double boot = uniform(rng, -1, 1);
    std::vector<double> adv, ret;
    gae_advantages(r, v, boot, gamma, lambda, &adv, &ret);

    // oracle: direct exponentially weighted sum of td residuals
    for (int t = 0; t < n; ++t) {
      double expect = 0.0;
      for (int k = t; k < n; ++k) {
        const double next_v = (k == n - 1) ? boot : v[k + 1];
        const double delta = r[k] + gamma * next_v - v[k];
        expect += std::pow(gamma * lambda, k - t) * delta;
      }
      REQUIRE(adv[t] == Catch::Approx(expect).margin(1e-12));
    }
  }
}

namespace {

struct PolicyFixture {
  ObsLayout layout{1};
  NetConfig cfg{24, 12};
  GaussianPolicy policy;
  Tensor obs, pre_tanh, old_logp, adv;

  explicit PolicyFixture(uint64_t seed, int batch = 16) {
    Rng rng(seed);
    policy = GaussianPolicy::create(layout, cfg, 2, 1.0, false, rng);
    obs = Tensor::randn(batch, layout.dim(), rng, 0.4);
    Rng arng(seed + 1);
    auto out = policy.act(obs, false, arng);
    pre_tanh = out.pre_tanh;
    old_logp = out.log_prob;
    adv = Tensor::randn(batch, 1, rng);
  }
};

}  // namespace

TEST_CASE("ppo loss equals -mean(advantage) at ratio one", "[rl][ppo]") {
  PolicyFixture f(3);
  Tape t;
  Tape::Ref loss = ppo_actor_loss_tape(t, f.policy, f.obs, f.pre_tanh, f.old_logp, f.adv, 0.2);
  double mean_adv = 0.0;
  for (double a : f.adv.v) mean_adv += a;
  mean_adv /= f.adv.size();
  REQUIRE(t.val(loss).v[0] == Catch::Approx(-mean_adv).margin(1e-9));
}

TEST_CASE("ppo surrogate matches the per-element formula oracle", "[rl][ppo]") {
  PolicyFixture f(4);
  // shift the stored log-probs so ratios differ from 1
  Rng rng(5);
  for (auto& lp : f.old_logp.v) lp += uniform(rng, -0.5, 0.5);
  const double clip = 0.2;
  Tape t;
  Tape::Ref loss = ppo_actor_loss_tape(t, f.policy, f.obs, f.pre_tanh, f.old_logp, f.adv, clip);

  Tensor logp = f.policy.log_prob(f.obs, f.pre_tanh);
  double expect = 0.0;
  for (int i = 0; i < f.obs.rows; ++i) {
    const double ratio = std::exp(logp.v[i] - f.old_logp.v[i]);
    const double a = f.adv.v[i];
    expect += std::min(ratio * a, clamp(ratio, 1 - clip, 1 + clip) * a);
  }
  expect = -expect / f.obs.rows;
  REQUIRE(t.val(loss).v[0] == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("ppo clipping freezes the gradient on over-ratio positive advantages", "[rl][ppo]") {
  PolicyFixture f(6, 4);
  const double clip = 0.2;
  // make every ratio about 1 + 2*clip by shifting old log-probs down
  for (auto& lp : f.old_logp.v) lp -= std::log(1.0 + 2.0 * clip);
  for (auto& a : f.adv.v) a = 1.0;  // positive advantages
  f.policy.params.zero_grads();
  Tape t;
  Tape::Ref loss = ppo_actor_loss_tape(t, f.policy, f.obs, f.pre_tanh, f.old_logp, f.adv, clip);
  t.backward(loss);
  // clipped branch is constant: all parameter gradients vanish
  for (auto& e : f.policy.params.entries)
    for (double g : e.grad.v) REQUIRE(g == 0.0);
}

TEST_CASE("advantage normalization contract", "[rl][ppo]") {
  RolloutBuffer buf;
  Rng rng(7);
  RolloutBuffer::Segment seg;
  for (int i = 0; i < 400; ++i) {
    Step s;
    s.advantage = uniform(rng, -3, 5);
    seg.steps.push_back(s);
  }
  buf.segments.push_back(seg);
  buf.normalize_advantages();
  double mean = 0.0, var = 0.0;
  for (const auto& s : buf.segments[0].steps) mean += s.advantage;
  mean /= 400;
  for (const auto& s : buf.segments[0].steps) var += (s.advantage - mean) * (s.advantage - mean);
  const double stddev = std::sqrt(var / 400);
  REQUIRE(std::abs(mean) < 1e-10);
  REQUIRE(stddev == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("prioritized replay statistics", "[rl][replay]") {
  SECTION("two items, p=(1,3), alpha=1 sample at 0.25/0.75") {
    PrioritizedReplay rep(8, 1.0);
    Step s;
    rep.insert(s, 1.0);
    rep.insert(s, 3.0);
    Rng rng(8);
    int first = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      auto b = rep.sample(1, 0.4, rng);
      if (b.indices[0] == 0) ++first;
    }
    REQUIRE(first / static_cast<double>(draws) == Catch::Approx(0.25).margin(0.01));
  }
  SECTION("alpha=0 samples uniformly regardless of priority") {
    PrioritizedReplay rep(8, 0.0);
    Step s;
    rep.insert(s, 0.001);
    rep.insert(s, 1000.0);
    Rng rng(9);
    int first = 0;
    for (int i = 0; i < 20000; ++i)
      if (rep.sample(1, 0.4, rng).indices[0] == 0) ++first;
    REQUIRE(first / 20000.0 == Catch::Approx(0.5).margin(0.02));
  }
  SECTION("single item is always sampled with weight one") {
    PrioritizedReplay rep(4, 0.6);
    Step s;
    rep.insert(s, 2.5);
    Rng rng(10);
    auto b = rep.sample(5, 0.7, rng);
    for (int idx : b.indices) REQUIRE(idx == 0);
    for (double w : b.weights) REQUIRE(w == 1.0);
  }
  SECTION("empty buffer sampling is an error") {
    PrioritizedReplay rep(4, 0.6);
    Rng rng(11);
    REQUIRE_THROWS_AS(rep.sample(1, 0.4, rng), ConfigError);
  }
}

TEST_CASE("replay eviction is strictly fifo at capacity", "[rl][replay]") {
  PrioritizedReplay rep(4, 0.6);
  for (int i = 0; i < 7; ++i) {
    Step s;
    s.reward = i;
    rep.insert(s, 1.0);
    REQUIRE(rep.size() <= 4);
  }
  // slots now hold items 4,5,6,3: oldest overwritten first
  std::vector<double> rewards;
  for (int i = 0; i < 4; ++i) rewards.push_back(rep.at(i).reward);
  std::sort(rewards.begin(), rewards.end());
  REQUIRE(rewards == std::vector<double>{3.0, 4.0, 5.0, 6.0});
}

TEST_CASE("priority formula evaluates the appendix expression", "[rl][sac]") {
  // p = |r + gamma V - Q| at r=1, gamma=0.98, V=0.5, Q=1.2
  const double p = std::abs(1.0 + 0.98 * 0.5 - 1.2);
  REQUIRE(p == Catch::Approx(0.29).margin(1e-12));

  // fixed point: r=0 and Q consistent with gamma V gives zero priority
  const double q_consistent = 0.98 * 0.5;
  REQUIRE(std::abs(0.0 + 0.98 * 0.5 - q_consistent) == 0.0);
}

TEST_CASE("sac config defaults follow the off-policy table", "[rl][sac]") {
  SACConfig cfg;
  REQUIRE(cfg.gamma == 0.98);
  REQUIRE(cfg.batch_size == 256);
  REQUIRE(cfg.replay_capacity == 100000);
  REQUIRE(cfg.lr == 3e-4);
}

TEST_CASE("ppo config defaults follow the on-policy table", "[rl][ppo]") {
  PPOConfig cfg;
  REQUIRE(cfg.gamma == 0.99);
  REQUIRE(cfg.epochs == 10);
  REQUIRE(cfg.minibatches == 32);
  REQUIRE(cfg.lr == 3e-4);
}

TEST_CASE("hindsight relabeling recomputes rewards through the reward oracle", "[rl][her]") {
  ScenarioSpec spec = make_push2d();
  Maze2D env(spec);
  Rng rng(12);
  Task t = sample_random_task(spec, rng);
  env.begin_task(t);
  std::vector<Step> episode;
  for (int i = 0; i < 40; ++i) {
    Vec2 f{uniform(rng, -1, 1), uniform(rng, -1, 1)};
    Transition tr = env.step({f});
    Step s;
    s.state = tr.state;
    s.action = tr.action;
    s.reward = tr.reward;
    s.next_state = tr.next_state;
    s.goal = tr.goal;
    s.done = tr.done;
    s.success = tr.success;
    s.achieved = tr.achieved;
    episode.push_back(s);
    if (tr.done) break;
  }

  SECTION("her_ratio = 0 produces nothing") {
    auto extra = hindsight_relabel(episode, rng, 0.0, spec.delta, 0.98);
    REQUIRE(extra.empty());
  }
  SECTION("relabeled rewards match the sparse reward oracle") {
    auto extra = hindsight_relabel(episode, rng, 1.0, spec.delta, 0.98);
    REQUIRE(extra.size() == episode.size());
    for (const auto& s : extra) {
      REQUIRE(s.reward == sparse_reward(s.next_state, s.goal, spec.delta));
      REQUIRE(s.goal.target_index == episode[0].goal.target_index);
    }
  }
  SECTION("relabeling a final transition with its own achieved goal succeeds") {
    std::vector<Step> tail{episode.back()};
    Rng r2(1);
    // with ratio 1 and a single step, the future index is the step itself
    auto extra = hindsight_relabel(tail, r2, 1.0, spec.delta, 0.98);
    REQUIRE(extra.size() == 1);
    REQUIRE(extra[0].reward == 1.0);
    REQUIRE(extra[0].ret == 1.0);
  }
}

TEST_CASE("sac target networks converge to online at tau=1", "[rl][sac]") {
  Rng rng(13);
  ObsLayout layout{1};
  NetConfig net{16, 8};
  SACConfig cfg;
  cfg.batch_size = 8;
  SACLearner learner(layout, net, cfg, rng);
  // perturb online critics away from the targets
  for (auto& e : learner.q1.params.entries)
    for (auto& v : e.value.v) v += 0.1;
  polyak_update(learner.q1_target.params, learner.q1.params, 1.0);
  for (size_t i = 0; i < learner.q1.params.count(); ++i)
    REQUIRE(learner.q1_target.params.at(static_cast<int>(i)).value.v ==
            learner.q1.params.at(static_cast<int>(i)).value.v);
}

TEST_CASE("sac update runs and refreshes priorities", "[rl][sac]") {
  Rng rng(14);
  ScenarioSpec spec = make_u_shape(true);
  const ObsLayout layout = spec.layout();
  NetConfig net{16, 8};
  SACConfig cfg;
  cfg.batch_size = 16;
  SACLearner learner(layout, net, cfg, rng);
  PrioritizedReplay d_rl(256, cfg.alpha_priority);

  Maze2D env(spec);
  env.begin_task(sample_random_task(spec, rng));
  for (int i = 0; i < 64; ++i) {
    Vec2 f{uniform(rng, -1, 1), uniform(rng, -1, 1)};
    Transition tr = env.step({f});
    Step s;
    s.state = tr.state;
    s.action = tr.action;
    s.pre_tanh = {std::atanh(clamp(tr.action.x, -0.999, 0.999)),
                  std::atanh(clamp(tr.action.y, -0.999, 0.999))};
    s.reward = tr.reward;
    s.next_state = tr.next_state;
    s.goal = tr.goal;
    s.done = tr.done;
    s.success = tr.success;
    s.achieved = tr.achieved;
    d_rl.insert(s, 1.0);
    if (tr.done) env.begin_task(sample_random_task(spec, rng));
  }
  auto stats = learner.update(d_rl, nullptr, 0.4, rng);
  REQUIRE(std::isfinite(stats.critic_loss));
  REQUIRE(std::isfinite(stats.actor_loss));
  REQUIRE(stats.alpha > 0.0);
  // at least one sampled slot should now carry a refreshed priority != 1
  bool changed = false;
  for (int i = 0; i < d_rl.size(); ++i)
    if (d_rl.priority(i) != 1.0) changed = true;
  REQUIRE(changed);
}
