#include <catch2/catch_amalgamated.hpp>

#include "sir/nn.hpp"

using namespace sir;

TEST_CASE("mlp with zero weights and bias is the zero map", "[nn]") {
  Rng rng(1);
  ParamSet ps;
  Mlp net = Mlp::create(ps, "m", {3, 4, 2}, Act::Tanh, Act::None, rng);
  for (auto& e : ps.entries) e.value.zero();
  Tensor x = Tensor::randn(5, 3, rng);
  Tensor y = net.forward(ps, x);
  for (double v : y.v) REQUIRE(v == 0.0);
}

TEST_CASE("identity-constructed linear layer is the identity map", "[nn]") {
  Rng rng(2);
  ParamSet ps;
  Mlp net = Mlp::create(ps, "m", {4, 4}, Act::Tanh, Act::None, rng);
  ps.by_name("m.w0").value.zero();
  for (int i = 0; i < 4; ++i) ps.by_name("m.w0").value.at(i, i) = 1.0;
  Tensor x = Tensor::randn(3, 4, rng);
  Tensor y = net.forward(ps, x);
  for (int i = 0; i < x.size(); ++i) REQUIRE(y.v[i] == x.v[i]);
}

TEST_CASE("random 4-8-2 net matches matrix-arithmetic oracle", "[nn]") {
  Rng rng(3);
  ParamSet ps;
  Mlp net = Mlp::create(ps, "m", {4, 8, 2}, Act::Tanh, Act::None, rng);
  Tensor x = Tensor::randn(6, 4, rng);
  Tensor y = net.forward(ps, x);

  // oracle: affine + tanh + affine with explicit loops
  const Tensor& w0 = ps.by_name("m.w0").value;
  const Tensor& b0 = ps.by_name("m.b0").value;
  const Tensor& w1 = ps.by_name("m.w1").value;
  const Tensor& b1 = ps.by_name("m.b1").value;
  for (int r = 0; r < x.rows; ++r) {
    double h[8];
    for (int j = 0; j < 8; ++j) {
      double s = b0.at(0, j);
      for (int k = 0; k < 4; ++k) s += x.at(r, k) * w0.at(k, j);
      h[j] = std::tanh(s);
    }
    for (int j = 0; j < 2; ++j) {
      double s = b1.at(0, j);
      for (int k = 0; k < 8; ++k) s += h[k] * w1.at(k, j);
      REQUIRE(std::abs(y.at(r, j) - s) < 1e-12);
    }
  }
}

TEST_CASE("tape and fast forward paths agree", "[nn]") {
  Rng rng(4);
  ParamSet ps;
  Mlp net = Mlp::create(ps, "m", {5, 7, 7, 3}, Act::Relu, Act::None, rng);
  Tensor x = Tensor::randn(9, 5, rng);
  Tensor fast = net.forward(ps, x);
  Tape t;
  const Tensor& taped = t.val(net.forward(t, ps, t.input(x)));
  for (int i = 0; i < fast.size(); ++i) REQUIRE(fast.v[i] == taped.v[i]);
}

namespace {

AttentionEncoder small_encoder(ParamSet& ps, Rng& rng, int self_dim = 4, int obj_dim = 3) {
  return AttentionEncoder::create(ps, "enc", self_dim, obj_dim, {8, 6}, {8, 6}, {10}, 5,
                                  Act::Tanh, rng);
}

}  // namespace

TEST_CASE("attention over a single object has weight one and e = g(o1)", "[nn][attention]") {
  Rng rng(5);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  Tensor self_in = Tensor::randn(3, 4, rng);
  Tensor obj = Tensor::randn(3, 3, rng);
  Tensor w, e;
  enc.weights_and_embed(ps, self_in, {obj}, &w, &e);
  for (int r = 0; r < 3; ++r) REQUIRE(w.at(r, 0) == 1.0);
  Tensor g_out = enc.g.forward(ps, obj);
  for (int i = 0; i < e.size(); ++i) REQUIRE(e.v[i] == Catch::Approx(g_out.v[i]).margin(1e-14));
}

TEST_CASE("two identical objects split weights evenly", "[nn][attention]") {
  Rng rng(6);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  Tensor self_in = Tensor::randn(2, 4, rng);
  Tensor obj = Tensor::randn(2, 3, rng);
  Tensor w, e;
  enc.weights_and_embed(ps, self_in, {obj, obj}, &w, &e);
  for (int r = 0; r < 2; ++r) {
    REQUIRE(w.at(r, 0) == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(w.at(r, 1) == Catch::Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("duplicating an object k times equals a +ln k logit shift", "[nn][attention]") {
  // softmax algebra: k copies of object o among pool {o, p} renormalize to
  // the same weights as logit(o) + ln k in the two-object pool
  Rng rng(7);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  const int k = 4;
  Tensor self_in = Tensor::randn(1, 4, rng);
  Tensor o = Tensor::randn(1, 3, rng);
  Tensor p = Tensor::randn(1, 3, rng);

  std::vector<Tensor> dup(k, o);
  dup.push_back(p);
  Tensor w_dup, e_dup;
  enc.weights_and_embed(ps, self_in, dup, &w_dup, &e_dup);

  // oracle: compute logits directly and apply the shifted two-way softmax
  Tensor fo = enc.f.forward(ps, self_in);
  Tensor go = enc.g.forward(ps, o);
  Tensor gp = enc.g.forward(ps, p);
  double lo = 0.0, lp = 0.0;
  for (int j = 0; j < enc.embed_dim; ++j) {
    lo += fo.v[j] * go.v[j];
    lp += fo.v[j] * gp.v[j];
  }
  const double shifted = lo + std::log(static_cast<double>(k));
  const double zo = std::exp(shifted), zp = std::exp(lp);
  const double w_o_total = zo / (zo + zp);

  double dup_total = 0.0;
  for (int i = 0; i < k; ++i) dup_total += w_dup.at(0, i);
  REQUIRE(dup_total == Catch::Approx(w_o_total).margin(1e-12));
  REQUIRE(w_dup.at(0, k) == Catch::Approx(zp / (zo + zp)).margin(1e-12));
}

TEST_CASE("attention output is permutation invariant over objects", "[nn][attention]") {
  Rng rng(8);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  Tensor self_in = Tensor::randn(2, 4, rng);
  Tensor a = Tensor::randn(2, 3, rng), b = Tensor::randn(2, 3, rng), c = Tensor::randn(2, 3, rng);
  Tensor y1 = enc.forward(ps, self_in, {a, b, c});
  Tensor y2 = enc.forward(ps, self_in, {c, a, b});
  for (int i = 0; i < y1.size(); ++i) REQUIRE(y1.v[i] == Catch::Approx(y2.v[i]).margin(1e-13));
}

TEST_CASE("attention encoder rejects an empty object list", "[nn][attention]") {
  Rng rng(9);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  Tensor self_in = Tensor::randn(1, 4, rng);
  REQUIRE_THROWS_AS(enc.forward(ps, self_in, {}), ConfigError);
}

TEST_CASE("attention tape gradients match finite differences", "[nn][attention][grad]") {
  Rng rng(10);
  ParamSet ps;
  AttentionEncoder enc = small_encoder(ps, rng);
  Tensor self_in = Tensor::randn(3, 4, rng);
  std::vector<Tensor> objs{Tensor::randn(3, 3, rng), Tensor::randn(3, 3, rng)};

  auto loss_value = [&]() {
    Tape t;
    std::vector<Tape::Ref> orefs{t.input(objs[0]), t.input(objs[1])};
    return t.val(t.mean(t.square(enc.forward(t, ps, t.input(self_in), orefs)))).v[0];
  };

  ps.zero_grads();
  {
    Tape t;
    std::vector<Tape::Ref> orefs{t.input(objs[0]), t.input(objs[1])};
    t.backward(t.mean(t.square(enc.forward(t, ps, t.input(self_in), orefs))));
  }
  const double h = 1e-5;
  Rng pick(42);
  for (int probe = 0; probe < 60; ++probe) {
    const int ei = uniform_int(pick, 0, static_cast<int>(ps.count()) - 1);
    auto& e = ps.at(ei);
    const int vi = uniform_int(pick, 0, e.value.size() - 1);
    const double keep = e.value.v[vi];
    e.value.v[vi] = keep + h;
    const double up = loss_value();
    e.value.v[vi] = keep - h;
    const double dn = loss_value();
    e.value.v[vi] = keep;
    const double fd = (up - dn) / (2 * h);
    const double ad = e.grad.v[vi];
    const double denom = std::max({std::abs(fd), std::abs(ad), 1e-8});
    REQUIRE(std::abs(fd - ad) / denom < 1e-4);
  }
}
