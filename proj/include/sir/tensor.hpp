#pragma once

#include <cstdlib>
#include <cstring>
#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>

#include "sir/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sir {

// Row-major dense matrix of doubles. Vectors are 1xN or Nx1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double x) {
    Tensor t(r, c);
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
  }
  static Tensor from_row(const std::vector<double>& row) {
    Tensor t(1, static_cast<int>(row.size()));
    t.v = row;
    return t;
  }
  static Tensor randn(int r, int c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (auto& x : t.v) x = gaussian(rng) * scale;
    return t;
  }

  int size() const { return rows * cols; }
  double& at(int i, int j) { return v[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return v[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return v.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return v.data() + static_cast<size_t>(i) * cols; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline int num_threads() {
  static int n = [] {
    if (const char* env = std::getenv("SIR_THREADS")) {
      int k = std::atoi(env);
      if (k >= 1) return k;
    }
    return 1;
  }();
  return n;
}

// C += A * B   (A: m x k, B: k x n, C: m x n)
inline void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.cols == b.rows && a.rows == c.rows && b.cols == c.cols);
  const int m = a.rows, k = a.cols, n = b.cols;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) \
    if (num_threads() > 1 && static_cast<long>(m) * k * n > 65536)
#endif
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// C += A * B^T   (A: m x k, B: n x k, C: m x n)
inline void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.cols == b.cols && a.rows == c.rows && b.rows == c.cols);
  const int m = a.rows, k = a.cols, n = b.rows;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(num_threads()) \
    if (num_threads() > 1 && static_cast<long>(m) * k * n > 65536)
#endif
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    const double* ai = a.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// C += A^T * B   (A: k x m, B: k x n, C: m x n)
inline void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  assert(a.rows == b.rows && a.cols == c.rows && b.cols == c.cols);
  const int k = a.rows, m = a.cols, n = b.cols;
  for (int p = 0; p < k; ++p) {
    const double* ap = a.row(p);
    const double* bp = b.row(p);
    for (int i = 0; i < m; ++i) {
      const double api = ap[i];
      double* ci = c.row(i);
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

// Named parameter tensors with matching gradient slots. Shapes are fixed
// after construction; the version counter ticks on every optimizer step.
struct ParamSet {
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, int> index;
  int64_t version = 0;

  int add(const std::string& name, Tensor init) {
    if (index.count(name)) throw ConfigError("duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.grad = Tensor::zeros(init.rows, init.cols);
    e.value = std::move(init);
    entries.push_back(std::move(e));
    index[name] = static_cast<int>(entries.size()) - 1;
    return static_cast<int>(entries.size()) - 1;
  }
  Entry& at(int i) { return entries[i]; }
  const Entry& at(int i) const { return entries[i]; }
  Entry& by_name(const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw ConfigError("unknown parameter: " + name);
    return entries[it->second];
  }
  void zero_grads() {
    for (auto& e : entries) e.grad.zero();
  }
  bool grads_finite() const {
    for (const auto& e : entries)
      if (!e.grad.all_finite()) return false;
    return true;
  }
  size_t count() const { return entries.size(); }
};

// Reverse-mode tape. Forward calls record nodes; backward(loss) fills node
// gradients and accumulates into bound ParamSet grad slots.
class Tape {
 public:
  using Ref = int;

  Ref input(const Tensor& t) { return push_external(&t); }
  Ref constant(Tensor t) { return push_owned(std::move(t)); }
  Ref param(ParamSet& ps, int slot) {
    Ref r = push_external(&ps.at(slot).value);
    nodes_[r].ps = &ps;
    nodes_[r].pslot = slot;
    return r;
  }
  Ref param(ParamSet& ps, const std::string& name) {
    return param(ps, ps.index.at(name));
  }

  const Tensor& val(Ref r) const { return *nodes_[r].pval; }
  Tensor& grad(Ref r) { return nodes_[r].grad; }

  Ref matmul(Ref a, Ref b) {
    const Tensor &A = val(a), &B = val(b);
    if (A.cols != B.rows) throw ConfigError("matmul shape mismatch");
    Tensor C(A.rows, B.cols);
    gemm_nn(A, B, C);
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, b](Tape& t) {
      gemm_nt(t.grad(r), t.val(b), t.grad(a));  // dA += dC * B^T
      gemm_tn(t.val(a), t.grad(r), t.grad(b));  // dB += A^T * dC
    };
    return r;
  }

  // x * W + bias broadcast over rows. bias is 1 x n.
  Ref linear(Ref x, Ref w, Ref b) {
    const Tensor &X = val(x), &W = val(w), &B = val(b);
    if (X.cols != W.rows || B.rows != 1 || B.cols != W.cols)
      throw ConfigError("linear shape mismatch");
    Tensor Y(X.rows, W.cols);
    for (int i = 0; i < Y.rows; ++i) std::memcpy(Y.row(i), B.row(0), sizeof(double) * Y.cols);
    gemm_nn(X, W, Y);
    Ref r = push_owned(std::move(Y));
    nodes_[r].back = [r, x, w, b](Tape& t) {
      gemm_nt(t.grad(r), t.val(w), t.grad(x));
      gemm_tn(t.val(x), t.grad(r), t.grad(w));
      Tensor& db = t.grad(b);
      const Tensor& dy = t.grad(r);
      for (int i = 0; i < dy.rows; ++i) {
        const double* d = dy.row(i);
        for (int j = 0; j < dy.cols; ++j) db.v[j] += d[j];
      }
    };
    return r;
  }

  Ref add(Ref a, Ref b) {
    return binary(a, b, [](double x, double y) { return x + y; },
                  [](Tape& t, Ref r, Ref a2, Ref b2) {
                    axpy(t.grad(a2), t.grad(r), 1.0);
                    axpy(t.grad(b2), t.grad(r), 1.0);
                  });
  }
  Ref sub(Ref a, Ref b) {
    return binary(a, b, [](double x, double y) { return x - y; },
                  [](Tape& t, Ref r, Ref a2, Ref b2) {
                    axpy(t.grad(a2), t.grad(r), 1.0);
                    axpy(t.grad(b2), t.grad(r), -1.0);
                  });
  }
  Ref mul(Ref a, Ref b) {
    const Tensor &A = val(a), &B = val(b);
    check_same(A, B, "mul");
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < C.size(); ++i) C.v[i] = A.v[i] * B.v[i];
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, b](Tape& t) {
      const Tensor &A2 = t.val(a), &B2 = t.val(b), &d = t.grad(r);
      Tensor &da = t.grad(a), &db = t.grad(b);
      for (int i = 0; i < d.size(); ++i) {
        da.v[i] += d.v[i] * B2.v[i];
        db.v[i] += d.v[i] * A2.v[i];
      }
    };
    return r;
  }

  Ref scale(Ref a, double c) {
    return unary(a, [c](double x) { return c * x; },
                 [c](double, double) { return c; });
  }
  Ref add_scalar(Ref a, double c) {
    return unary(a, [c](double x) { return x + c; },
                 [](double, double) { return 1.0; });
  }
  Ref tanh_(Ref a) {
    return unary(a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
  }
  Ref relu(Ref a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }
  Ref sigmoid(Ref a) {
    return unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
  }
  Ref exp_(Ref a) {
    return unary(a, [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
  }
  Ref log_(Ref a) {
    return unary(a, [](double x) { return std::log(x); },
                 [](double x, double) { return 1.0 / x; });
  }
  Ref square(Ref a) {
    return unary(a, [](double x) { return x * x; },
                 [](double x, double) { return 2.0 * x; });
  }
  // Gradient flows only where lo < x < hi.
  Ref clamp_(Ref a, double lo, double hi) {
    return unary(a, [lo, hi](double x) { return clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
  }
  // max(x, c); gradient passes on the x side of the tie.
  Ref max_scalar(Ref a, double c) {
    return unary(a, [c](double x) { return x >= c ? x : c; },
                 [c](double x, double) { return x >= c ? 1.0 : 0.0; });
  }

  Ref min_elem(Ref a, Ref b) {
    const Tensor &A = val(a), &B = val(b);
    check_same(A, B, "min_elem");
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < C.size(); ++i) C.v[i] = A.v[i] <= B.v[i] ? A.v[i] : B.v[i];
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, b](Tape& t) {
      const Tensor &A2 = t.val(a), &B2 = t.val(b), &d = t.grad(r);
      Tensor &da = t.grad(a), &db = t.grad(b);
      for (int i = 0; i < d.size(); ++i) {
        if (A2.v[i] <= B2.v[i])
          da.v[i] += d.v[i];
        else
          db.v[i] += d.v[i];
      }
    };
    return r;
  }
  Ref max_elem(Ref a, Ref b) {
    const Tensor &A = val(a), &B = val(b);
    check_same(A, B, "max_elem");
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < C.size(); ++i) C.v[i] = A.v[i] >= B.v[i] ? A.v[i] : B.v[i];
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, b](Tape& t) {
      const Tensor &A2 = t.val(a), &B2 = t.val(b), &d = t.grad(r);
      Tensor &da = t.grad(a), &db = t.grad(b);
      for (int i = 0; i < d.size(); ++i) {
        if (A2.v[i] >= B2.v[i])
          da.v[i] += d.v[i];
        else
          db.v[i] += d.v[i];
      }
    };
    return r;
  }

  Ref sum(Ref a) {
    const Tensor& A = val(a);
    Tensor C(1, 1);
    for (double x : A.v) C.v[0] += x;
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a](Tape& t) {
      const double d = t.grad(r).v[0];
      Tensor& da = t.grad(a);
      for (auto& x : da.v) x += d;
    };
    return r;
  }
  Ref mean(Ref a) {
    const Tensor& A = val(a);
    if (A.size() == 0) throw ConfigError("mean of empty tensor");
    return scale(sum(a), 1.0 / A.size());
  }
  // Row-wise sum: (B x N) -> (B x 1)
  Ref rowsum(Ref a) {
    const Tensor& A = val(a);
    Tensor C(A.rows, 1);
    for (int i = 0; i < A.rows; ++i) {
      const double* ai = A.row(i);
      double s = 0.0;
      for (int j = 0; j < A.cols; ++j) s += ai[j];
      C.v[i] = s;
    }
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a](Tape& t) {
      const Tensor& d = t.grad(r);
      Tensor& da = t.grad(a);
      for (int i = 0; i < da.rows; ++i) {
        double* di = da.row(i);
        for (int j = 0; j < da.cols; ++j) di[j] += d.v[i];
      }
    };
    return r;
  }
  // Row-wise dot product of equal-shape matrices: (B x N, B x N) -> (B x 1)
  Ref rowdot(Ref a, Ref b) { return rowsum(mul(a, b)); }

  // Broadcast a 1 x N row over B rows.
  Ref expand_rows(Ref a, int b_rows) {
    const Tensor& A = val(a);
    if (A.rows != 1) throw ConfigError("expand_rows wants a 1 x N input");
    Tensor C(b_rows, A.cols);
    for (int i = 0; i < b_rows; ++i) std::memcpy(C.row(i), A.row(0), sizeof(double) * A.cols);
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a](Tape& t) {
      const Tensor& d = t.grad(r);
      Tensor& da = t.grad(a);
      for (int i = 0; i < d.rows; ++i) {
        const double* di = d.row(i);
        for (int j = 0; j < d.cols; ++j) da.v[j] += di[j];
      }
    };
    return r;
  }
  // Multiply every row i of m by col[i]: (B x 1, B x N) -> (B x N)
  Ref bcast_col_mul(Ref col, Ref m) {
    const Tensor &C0 = val(col), &M = val(m);
    if (C0.cols != 1 || C0.rows != M.rows) throw ConfigError("bcast_col_mul shape mismatch");
    Tensor C(M.rows, M.cols);
    for (int i = 0; i < M.rows; ++i) {
      const double c = C0.v[i];
      const double* mi = M.row(i);
      double* ci = C.row(i);
      for (int j = 0; j < M.cols; ++j) ci[j] = c * mi[j];
    }
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, col, m](Tape& t) {
      const Tensor &C1 = t.val(col), &M1 = t.val(m), &d = t.grad(r);
      Tensor &dc = t.grad(col), &dm = t.grad(m);
      for (int i = 0; i < M1.rows; ++i) {
        const double* di = d.row(i);
        const double* mi = M1.row(i);
        double* dmi = dm.row(i);
        double s = 0.0;
        for (int j = 0; j < M1.cols; ++j) {
          s += di[j] * mi[j];
          dmi[j] += di[j] * C1.v[i];
        }
        dc.v[i] += s;
      }
    };
    return r;
  }

  Ref concat_cols(const std::vector<Ref>& parts) {
    if (parts.empty()) throw ConfigError("concat_cols of nothing");
    int rows = val(parts[0]).rows, cols = 0;
    for (Ref p : parts) {
      if (val(p).rows != rows) throw ConfigError("concat_cols row mismatch");
      cols += val(p).cols;
    }
    Tensor C(rows, cols);
    int off = 0;
    for (Ref p : parts) {
      const Tensor& P = val(p);
      for (int i = 0; i < rows; ++i)
        std::memcpy(C.row(i) + off, P.row(i), sizeof(double) * P.cols);
      off += P.cols;
    }
    Ref r = push_owned(std::move(C));
    std::vector<Ref> ps = parts;
    nodes_[r].back = [r, ps](Tape& t) {
      const Tensor& d = t.grad(r);
      int off2 = 0;
      for (Ref p : ps) {
        Tensor& dp = t.grad(p);
        for (int i = 0; i < d.rows; ++i) {
          const double* di = d.row(i) + off2;
          double* dpi = dp.row(i);
          for (int j = 0; j < dp.cols; ++j) dpi[j] += di[j];
        }
        off2 += dp.cols;
      }
    };
    return r;
  }

  Ref slice_cols(Ref a, int j0, int width) {
    const Tensor& A = val(a);
    if (j0 < 0 || j0 + width > A.cols) throw ConfigError("slice_cols out of range");
    Tensor C(A.rows, width);
    for (int i = 0; i < A.rows; ++i)
      std::memcpy(C.row(i), A.row(i) + j0, sizeof(double) * width);
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, j0, width](Tape& t) {
      const Tensor& d = t.grad(r);
      Tensor& da = t.grad(a);
      for (int i = 0; i < d.rows; ++i) {
        const double* di = d.row(i);
        double* dai = da.row(i) + j0;
        for (int j = 0; j < width; ++j) dai[j] += di[j];
      }
    };
    return r;
  }

  // Numerically stable row-wise softmax.
  Ref softmax_rows(Ref a) {
    const Tensor& A = val(a);
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i) {
      const double* ai = A.row(i);
      double* ci = C.row(i);
      double mx = ai[0];
      for (int j = 1; j < A.cols; ++j) mx = std::max(mx, ai[j]);
      double s = 0.0;
      for (int j = 0; j < A.cols; ++j) {
        ci[j] = std::exp(ai[j] - mx);
        s += ci[j];
      }
      for (int j = 0; j < A.cols; ++j) ci[j] /= s;
    }
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a](Tape& t) {
      const Tensor &Y = t.val(r), &d = t.grad(r);
      Tensor& da = t.grad(a);
      for (int i = 0; i < Y.rows; ++i) {
        const double *yi = Y.row(i), *di = d.row(i);
        double* dai = da.row(i);
        double dot = 0.0;
        for (int j = 0; j < Y.cols; ++j) dot += yi[j] * di[j];
        for (int j = 0; j < Y.cols; ++j) dai[j] += yi[j] * (di[j] - dot);
      }
    };
    return r;
  }

  Ref stop_grad(Ref a) { return constant(val(a)); }

  // Seeds d(loss)=1 and sweeps the tape in reverse; gradients of param
  // leaves are accumulated into their ParamSet grad slots.
  void backward(Ref loss) {
    if (val(loss).size() != 1) throw ConfigError("backward expects a scalar loss");
    for (auto& n : nodes_) {
      n.grad = Tensor::zeros(n.pval->rows, n.pval->cols);
    }
    nodes_[loss].grad.v[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[i].back) nodes_[i].back(*this);
    }
    for (auto& n : nodes_) {
      if (n.ps) {
        Tensor& g = n.ps->at(n.pslot).grad;
        for (int i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
      }
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* pval = nullptr;
    Tensor grad;
    std::function<void(Tape&)> back;
    ParamSet* ps = nullptr;
    int pslot = -1;
  };

  // deque: element references stay valid as nodes are appended
  std::deque<Node> nodes_;

  Ref push_owned(Tensor t) {
    Node n;
    n.owned = std::move(t);
    nodes_.push_back(std::move(n));
    nodes_.back().pval = &nodes_.back().owned;
    return static_cast<Ref>(nodes_.size()) - 1;
  }
  Ref push_external(const Tensor* t) {
    Node n;
    n.pval = t;
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size()) - 1;
  }

  template <typename F, typename DF>
  Ref unary(Ref a, F f, DF df) {
    const Tensor& A = val(a);
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < C.size(); ++i) C.v[i] = f(A.v[i]);
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, df](Tape& t) {
      const Tensor &A2 = t.val(a), &Y = t.val(r), &d = t.grad(r);
      Tensor& da = t.grad(a);
      for (int i = 0; i < d.size(); ++i) da.v[i] += d.v[i] * df(A2.v[i], Y.v[i]);
    };
    return r;
  }
  template <typename F, typename BK>
  Ref binary(Ref a, Ref b, F f, BK bk) {
    const Tensor &A = val(a), &B = val(b);
    check_same(A, B, "binary op");
    Tensor C(A.rows, A.cols);
    for (int i = 0; i < C.size(); ++i) C.v[i] = f(A.v[i], B.v[i]);
    Ref r = push_owned(std::move(C));
    nodes_[r].back = [r, a, b, bk](Tape& t) { bk(t, r, a, b); };
    return r;
  }
  static void check_same(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ConfigError(std::string(what) + ": shape mismatch");
  }
  static void axpy(Tensor& dst, const Tensor& src, double a) {
    for (int i = 0; i < dst.size(); ++i) dst.v[i] += a * src.v[i];
  }
};

// Standard Adam with bias correction. Non-finite gradients skip the step
// and raise the flag instead of corrupting parameters.
struct Adam {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  int64_t skipped = 0;
  std::vector<Tensor> m, v;

  explicit Adam(double learning_rate = 3e-4) : lr(learning_rate) {}

  void step(ParamSet& ps) {
    if (m.empty()) {
      for (auto& e : ps.entries) {
        m.push_back(Tensor::zeros(e.value.rows, e.value.cols));
        v.push_back(Tensor::zeros(e.value.rows, e.value.cols));
      }
    }
    if (m.size() != ps.count()) throw ConfigError("adam state / param count mismatch");
    if (!ps.grads_finite()) {
      ++skipped;
      return;
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t k = 0; k < ps.count(); ++k) {
      Tensor& val = ps.at(static_cast<int>(k)).value;
      const Tensor& g = ps.at(static_cast<int>(k)).grad;
      Tensor &mk = m[k], &vk = v[k];
      for (int i = 0; i < val.size(); ++i) {
        mk.v[i] = beta1 * mk.v[i] + (1.0 - beta1) * g.v[i];
        vk.v[i] = beta2 * vk.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
        const double mhat = mk.v[i] / bc1;
        const double vhat = vk.v[i] / bc2;
        val.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
    ps.version++;
  }
};

// Global-norm gradient clipping; returns the pre-clip norm.
inline double clip_grad_norm(ParamSet& ps, double max_norm) {
  double sq = 0.0;
  for (auto& e : ps.entries)
    for (double g : e.grad.v) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& e : ps.entries)
      for (auto& g : e.grad.v) g *= s;
  }
  return norm;
}

}  // namespace sir
