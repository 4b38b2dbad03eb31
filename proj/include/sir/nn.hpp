#pragma once

#include <string>
#include <vector>

#include "sir/tensor.hpp"

namespace sir {

enum class Act { None, Tanh, Relu, Sigmoid };

inline double apply_act(Act a, double x) {
  switch (a) {
    case Act::Tanh: return std::tanh(x);
    case Act::Relu: return x > 0.0 ? x : 0.0;
    case Act::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Act::None: return x;
  }
  return x;
}

// Fully connected stack. Parameters live in an external ParamSet so nets
// can share one optimizer and one checkpoint container.
struct Mlp {
  std::vector<int> dims;  // input, hidden..., output
  Act hidden_act = Act::Tanh;
  Act output_act = Act::None;
  std::vector<int> w_slots, b_slots;

  static Mlp create(ParamSet& ps, const std::string& prefix, std::vector<int> dims,
                    Act hidden_act, Act output_act, Rng& rng, double final_scale = 1.0) {
    if (dims.size() < 2) throw ConfigError("mlp needs at least input and output dims");
    Mlp m;
    m.dims = std::move(dims);
    m.hidden_act = hidden_act;
    m.output_act = output_act;
    for (size_t l = 0; l + 1 < m.dims.size(); ++l) {
      const int in = m.dims[l], out = m.dims[l + 1];
      double scale = std::sqrt(1.0 / in);
      if (hidden_act == Act::Relu && l + 2 < m.dims.size()) scale = std::sqrt(2.0 / in);
      if (l + 2 == m.dims.size()) scale *= final_scale;
      m.w_slots.push_back(ps.add(prefix + ".w" + std::to_string(l), Tensor::randn(in, out, rng, scale)));
      m.b_slots.push_back(ps.add(prefix + ".b" + std::to_string(l), Tensor::zeros(1, out)));
    }
    return m;
  }

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }

  // fast inference path, no gradient bookkeeping
  Tensor forward(const ParamSet& ps, const Tensor& x) const {
    if (x.cols != dims.front()) throw ConfigError("mlp input dim mismatch");
    Tensor h = x;
    for (size_t l = 0; l < w_slots.size(); ++l) {
      const Tensor& w = ps.at(w_slots[l]).value;
      const Tensor& b = ps.at(b_slots[l]).value;
      Tensor y(h.rows, w.cols);
      for (int i = 0; i < y.rows; ++i) std::memcpy(y.row(i), b.row(0), sizeof(double) * y.cols);
      gemm_nn(h, w, y);
      const Act a = (l + 1 == w_slots.size()) ? output_act : hidden_act;
      if (a != Act::None)
        for (auto& v : y.v) v = apply_act(a, v);
      h = std::move(y);
    }
    return h;
  }

  Tape::Ref forward(Tape& t, ParamSet& ps, Tape::Ref x) const {
    Tape::Ref h = x;
    for (size_t l = 0; l < w_slots.size(); ++l) {
      h = t.linear(h, t.param(ps, w_slots[l]), t.param(ps, b_slots[l]));
      const Act a = (l + 1 == w_slots.size()) ? output_act : hidden_act;
      switch (a) {
        case Act::Tanh: h = t.tanh_(h); break;
        case Act::Relu: h = t.relu(h); break;
        case Act::Sigmoid: h = t.sigmoid(h); break;
        case Act::None: break;
      }
    }
    return h;
  }
};

// Attention over per-object embeddings:
//   w_i = softmax_i( f(o_self) . g(o_i) ),  e = sum_i w_i g(o_i)
// The encoder output is head(concat(f(o_self), e)). Permutation invariant
// over the object list; f and g output dims must match.
struct AttentionEncoder {
  Mlp f;     // o_self -> embed
  Mlp g;     // o_i -> embed (shared across objects)
  Mlp head;  // concat(f_out, e) -> feature
  int embed_dim = 0;

  static AttentionEncoder create(ParamSet& ps, const std::string& prefix, int self_dim,
                                 int obj_dim, const std::vector<int>& self_embed_dims,
                                 const std::vector<int>& object_embed_dims,
                                 const std::vector<int>& head_dims, int out_dim,
                                 Act hidden_act, Rng& rng) {
    if (self_embed_dims.empty() || object_embed_dims.empty())
      throw ConfigError("attention encoder needs embed dims");
    if (self_embed_dims.back() != object_embed_dims.back())
      throw ConfigError("f and g output dims must match for the attention dot product");
    AttentionEncoder enc;
    enc.embed_dim = self_embed_dims.back();
    std::vector<int> fdims{self_dim};
    fdims.insert(fdims.end(), self_embed_dims.begin(), self_embed_dims.end());
    std::vector<int> gdims{obj_dim};
    gdims.insert(gdims.end(), object_embed_dims.begin(), object_embed_dims.end());
    std::vector<int> hdims{2 * enc.embed_dim};
    hdims.insert(hdims.end(), head_dims.begin(), head_dims.end());
    hdims.push_back(out_dim);
    enc.f = Mlp::create(ps, prefix + ".f", fdims, hidden_act, hidden_act, rng);
    enc.g = Mlp::create(ps, prefix + ".g", gdims, hidden_act, hidden_act, rng);
    enc.head = Mlp::create(ps, prefix + ".head", hdims, hidden_act, hidden_act, rng);
    return enc;
  }

  // Attention weights and pooled embedding for one batch (fast path).
  // objs[i] is the B x obj_dim feature block of object i.
  void weights_and_embed(const ParamSet& ps, const Tensor& self_in,
                         const std::vector<Tensor>& objs, Tensor* weights_out,
                         Tensor* embed_out) const {
    Tensor fo = f.forward(ps, self_in);
    pool(ps, fo, objs, weights_out, embed_out);
  }

  Tensor forward(const ParamSet& ps, const Tensor& self_in,
                 const std::vector<Tensor>& objs) const {
    Tensor fo = f.forward(ps, self_in);
    Tensor e;
    pool(ps, fo, objs, nullptr, &e);
    Tensor cat(self_in.rows, 2 * embed_dim);
    for (int r = 0; r < cat.rows; ++r) {
      std::memcpy(cat.row(r), fo.row(r), sizeof(double) * embed_dim);
      std::memcpy(cat.row(r) + embed_dim, e.row(r), sizeof(double) * embed_dim);
    }
    return head.forward(ps, cat);
  }

  Tape::Ref forward(Tape& t, ParamSet& ps, Tape::Ref self_in,
                    const std::vector<Tape::Ref>& objs) const {
    if (objs.empty()) throw ConfigError("attention path needs at least one object");
    const int n = static_cast<int>(objs.size());
    Tape::Ref fo = f.forward(t, ps, self_in);
    std::vector<Tape::Ref> gs;
    gs.reserve(n);
    for (auto o : objs) gs.push_back(g.forward(t, ps, o));
    std::vector<Tape::Ref> logits;
    logits.reserve(n);
    for (int i = 0; i < n; ++i) logits.push_back(t.rowdot(fo, gs[i]));
    Tape::Ref w = t.softmax_rows(t.concat_cols(logits));
    Tape::Ref e = -1;
    for (int i = 0; i < n; ++i) {
      Tape::Ref term = t.bcast_col_mul(t.slice_cols(w, i, 1), gs[i]);
      e = (i == 0) ? term : t.add(e, term);
    }
    return head.forward(t, ps, t.concat_cols({fo, e}));
  }

 private:
  void pool(const ParamSet& ps, const Tensor& fo, const std::vector<Tensor>& objs,
            Tensor* weights_out, Tensor* embed_out) const {
    if (objs.empty()) throw ConfigError("attention path needs at least one object");
    const int b = fo.rows;
    const int n = static_cast<int>(objs.size());
    std::vector<Tensor> gs;
    gs.reserve(n);
    for (const auto& o : objs) gs.push_back(g.forward(ps, o));
    Tensor w(b, n);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < b; ++r) {
        double s = 0.0;
        const double *fr = fo.row(r), *gr = gs[i].row(r);
        for (int j = 0; j < embed_dim; ++j) s += fr[j] * gr[j];
        w.at(r, i) = s;
      }
    for (int r = 0; r < b; ++r) {
      double mx = w.at(r, 0);
      for (int i = 1; i < n; ++i) mx = std::max(mx, w.at(r, i));
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        w.at(r, i) = std::exp(w.at(r, i) - mx);
        sum += w.at(r, i);
      }
      for (int i = 0; i < n; ++i) w.at(r, i) /= sum;
    }
    if (embed_out) {
      Tensor e(b, embed_dim);
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < b; ++r) {
          const double wi = w.at(r, i);
          const double* gr = gs[i].row(r);
          double* er = e.row(r);
          for (int j = 0; j < embed_dim; ++j) er[j] += wi * gr[j];
        }
      *embed_out = std::move(e);
    }
    if (weights_out) *weights_out = std::move(w);
  }
};

}  // namespace sir
