#include "wscf/substrate/ops.hpp"

#include <cmath>

namespace wscf {

namespace {

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename T>
void require_rank(const char* op, const Var<T>& a, int rank) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     to_string(a.shape()));
  }
}

template <typename T, typename Fwd, typename Bwd>
Var<T> unary(const char* op, const Var<T>& a, Fwd fwd, Bwd dfdx) {
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  return record<T>(op, std::move(out), {a}, [dfdx](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (auto* g = grad_slot(in)) {
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
    }
  });
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return record<T>("add", std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs)
      if (auto* g = grad_slot(*in))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return record<T>("sub", std::move(out), {a, b}, [](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0]))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = grad_slot(*self.inputs[1]))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return record<T>("mul", std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& x = *self.inputs[0];
    Node<T>& y = *self.inputs[1];
    if (auto* g = grad_slot(x))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * y.value[i];
    if (auto* g = grad_slot(y))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * x.value[i];
  });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  require_same_shape("div", a, b);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (b.value()[i] == T{0}) throw NumericError("div: zero denominator");
    out[i] = a.value()[i] / b.value()[i];
  }
  return record<T>("div", std::move(out), {a, b}, [](Node<T>& self) {
    Node<T>& x = *self.inputs[0];
    Node<T>& y = *self.inputs[1];
    if (auto* g = grad_slot(x))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] / y.value[i];
    if (auto* g = grad_slot(y))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] -= self.grad[i] * self.value[i] / y.value[i];
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  return unary<T>("add_scalar", a, [s](T x) { return x + s; }, [](T, T) { return T{1}; });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  return unary<T>("scale", a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return unary<T>("relu", a, [](T x) { return x > T{0} ? x : T{0}; },
                  [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  return unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= 0) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> softplus(const Var<T>& a) {
  return unary<T>(
      "softplus", a,
      [](T x) { return std::max(x, T{0}) + std::log1p(std::exp(-std::abs(x))); },
      [](T x, T) {
        if (x >= 0) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  return unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T{2} * x; });
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  double s = 0;
  for (T v : a.value().values()) s += v;
  return record<T>("sum", Tensor<T>({1}, static_cast<T>(s)), {a}, [](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0]))
      for (auto& v : g->values()) v += self.grad[0];
  });
}

template <typename T>
Var<T> sum_region(const Var<T>& a, int y0, int y1, int x0, int x1) {
  require_rank("sum_region", a, 2);
  const int h = a.shape()[0], w = a.shape()[1];
  if (y0 < 0 || x0 < 0 || y1 > h || x1 > w || y0 >= y1 || x0 >= x1) {
    throw ShapeError("sum_region: crop outside " + to_string(a.shape()));
  }
  double s = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) s += a.value().at(y, x);
  return record<T>("sum_region", Tensor<T>({1}, static_cast<T>(s)), {a},
                   [y0, y1, x0, x1](Node<T>& self) {
                     if (auto* g = grad_slot(*self.inputs[0]))
                       for (int y = y0; y < y1; ++y)
                         for (int x = x0; x < x1; ++x) g->at(y, x) += self.grad[0];
                   });
}

template <typename T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return record<T>("reshape", std::move(out), {a}, [](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0]))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> select(const Var<T>& a, int n) {
  const Shape& s = a.shape();
  if (s.size() < 2 || n < 0 || n >= s[0]) throw ShapeError("select: index out of range");
  Shape inner(s.begin() + 1, s.end());
  const std::size_t block = numel(inner);
  std::vector<T> vals(a.value().values().begin() + n * block,
                      a.value().values().begin() + (n + 1) * block);
  return record<T>("select", Tensor<T>(inner, std::move(vals)), {a}, [n, block](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0]))
      for (std::size_t i = 0; i < block; ++i) (*g)[n * block + i] += self.grad[i];
  });
}

template <typename T>
Var<T> stack(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  const Shape inner = parts[0].shape();
  for (const auto& p : parts)
    if (p.shape() != inner) throw ShapeError("stack: mismatched shapes");
  Shape outer{static_cast<int>(parts.size())};
  outer.insert(outer.end(), inner.begin(), inner.end());
  const std::size_t block = numel(inner);
  Tensor<T> out(outer);
  for (std::size_t k = 0; k < parts.size(); ++k)
    std::copy(parts[k].value().values().begin(), parts[k].value().values().end(),
              out.values().begin() + k * block);
  return record<T>("stack", std::move(out), parts, [block](Node<T>& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k)
      if (auto* g = grad_slot(*self.inputs[k]))
        for (std::size_t i = 0; i < block; ++i) (*g)[i] += self.grad[k * block + i];
  });
}

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank("concat_channels", p, 4);
  const int N = parts[0].shape()[0], H = parts[0].shape()[2], W = parts[0].shape()[3];
  int C = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    if (p.shape()[0] != N || p.shape()[2] != H || p.shape()[3] != W)
      throw ShapeError("concat_channels: mismatched " + to_string(p.shape()));
    offsets.push_back(C);
    C += p.shape()[1];
  }
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  Tensor<T> out({N, C, H, W});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int ck = parts[k].shape()[1];
    for (int n = 0; n < N; ++n)
      std::copy_n(parts[k].value().data() + static_cast<std::size_t>(n) * ck * plane, ck * plane,
                  out.data() + (static_cast<std::size_t>(n) * C + offsets[k]) * plane);
  }
  return record<T>("concat_channels", std::move(out), parts,
                   [offsets, N, C, plane](Node<T>& self) {
                     for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                       auto* g = grad_slot(*self.inputs[k]);
                       if (!g) continue;
                       const int ck = self.inputs[k]->value.shape()[1];
                       for (int n = 0; n < N; ++n) {
                         const T* src =
                             self.grad.data() + (static_cast<std::size_t>(n) * C + offsets[k]) * plane;
                         T* dst = g->data() + static_cast<std::size_t>(n) * ck * plane;
                         for (std::size_t i = 0; i < ck * plane; ++i) dst[i] += src[i];
                       }
                     }
                   });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, ConvSpec spec) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", w, 4);
  kernels::ConvGeometry g;
  g.batch = x.shape()[0];
  g.in_channels = x.shape()[1];
  g.in_h = x.shape()[2];
  g.in_w = x.shape()[3];
  g.out_channels = w.shape()[0];
  g.kernel = w.shape()[2];
  g.stride = spec.stride;
  g.pad = spec.pad;
  g.dilation = spec.dilation;
  if (w.shape()[1] != g.in_channels || w.shape()[3] != g.kernel) {
    throw ShapeError("conv2d: weight " + to_string(w.shape()) + " does not fit input " +
                     to_string(x.shape()));
  }
  if (b.value().size() != static_cast<std::size_t>(g.out_channels)) {
    throw ShapeError("conv2d: bias size mismatch");
  }
  if (g.out_h() <= 0 || g.out_w() <= 0) throw ShapeError("conv2d: empty output");
  Tensor<T> out({g.batch, g.out_channels, g.out_h(), g.out_w()});
  kernels::conv2d_forward(g, x.value().data(), w.value().data(), b.value().data(), out.data());
  return record<T>("conv2d", std::move(out), {x, w, b}, [g](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    Node<T>& wt = *self.inputs[1];
    Node<T>& bs = *self.inputs[2];
    if (auto* gi = grad_slot(in))
      kernels::conv2d_backward_input(g, self.grad.data(), wt.value.data(), gi->data());
    auto* gw = grad_slot(wt);
    auto* gb = grad_slot(bs);
    if (gw || gb) {
      // weight and bias grads come from one pass; unused slots go to scratch
      Tensor<T> tw, tb;
      T* pw = gw ? gw->data() : (tw = Tensor<T>(wt.value.shape())).data();
      T* pb = gb ? gb->data() : (tb = Tensor<T>(bs.value.shape())).data();
      kernels::conv2d_backward_weight(g, in.value.data(), self.grad.data(), pw, pb);
    }
  });
}

template <typename T>
Var<T> avg_pool(const Var<T>& x, int k) {
  require_rank("avg_pool", x, 4);
  const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  if (k <= 0 || H % k || W % k) throw ShapeError("avg_pool: size not divisible by kernel");
  const int oh = H / k, ow = W / k;
  const T inv = T{1} / static_cast<T>(k * k);
  Tensor<T> out({N, C, oh, ow});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int xx = 0; xx < W; ++xx) out.at(n, c, y / k, xx / k) += x.value().at(n, c, y, xx) * inv;
  return record<T>("avg_pool", std::move(out), {x}, [k, inv](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0])) {
      const Shape& s = g->shape();
      for (int n = 0; n < s[0]; ++n)
        for (int c = 0; c < s[1]; ++c)
          for (int y = 0; y < s[2]; ++y)
            for (int xx = 0; xx < s[3]; ++xx) g->at(n, c, y, xx) += self.grad.at(n, c, y / k, xx / k) * inv;
    }
  });
}

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  require_rank("global_avg_pool", x, 4);
  const int N = x.shape()[0], C = x.shape()[1];
  const std::size_t plane = static_cast<std::size_t>(x.shape()[2]) * x.shape()[3];
  Tensor<T> out({N, C});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      const T* p = x.value().data() + (static_cast<std::size_t>(n) * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
      out[n * C + c] = static_cast<T>(s / plane);
    }
  return record<T>("global_avg_pool", std::move(out), {x}, [N, C, plane](Node<T>& self) {
    if (auto* g = grad_slot(*self.inputs[0]))
      for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
          const T v = self.grad[n * C + c] / static_cast<T>(plane);
          T* p = g->data() + (static_cast<std::size_t>(n) * C + c) * plane;
          for (std::size_t i = 0; i < plane; ++i) p[i] += v;
        }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  require_rank("linear", x, 2);
  require_rank("linear", w, 2);
  const int N = x.shape()[0], K = x.shape()[1], M = w.shape()[0];
  if (w.shape()[1] != K || b.value().size() != static_cast<std::size_t>(M)) {
    throw ShapeError("linear: weight " + to_string(w.shape()) + " does not fit input " +
                     to_string(x.shape()));
  }
  Tensor<T> out({N, M});
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) {
      T acc = b.value()[m];
      for (int k = 0; k < K; ++k) acc += w.value()[m * K + k] * x.value()[n * K + k];
      out[n * M + m] = acc;
    }
  return record<T>("linear", std::move(out), {x, w, b}, [N, K, M](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    Node<T>& wt = *self.inputs[1];
    auto* gx = grad_slot(in);
    auto* gw = grad_slot(wt);
    auto* gb = grad_slot(*self.inputs[2]);
    for (int n = 0; n < N; ++n)
      for (int m = 0; m < M; ++m) {
        const T go = self.grad[n * M + m];
        if (gb) (*gb)[m] += go;
        for (int k = 0; k < K; ++k) {
          if (gx) (*gx)[n * K + k] += go * wt.value[m * K + k];
          if (gw) (*gw)[m * K + k] += go * in.value[n * K + k];
        }
      }
  });
}

template <typename T>
Var<T> cosine_correlation(const Var<T>& a, const Var<T>& b) {
  require_rank("cosine_correlation", a, 4);
  require_rank("cosine_correlation", b, 4);
  if (a.shape()[0] != b.shape()[0] || a.shape()[1] != b.shape()[1]) {
    throw ShapeError("cosine_correlation: mismatched batch/channels " + to_string(a.shape()) +
                     " vs " + to_string(b.shape()));
  }
  kernels::CorrelationGeometry g;
  g.batch = a.shape()[0];
  g.channels = a.shape()[1];
  g.h = a.shape()[2];
  g.w = a.shape()[3];
  g.ph = b.shape()[2];
  g.pw = b.shape()[3];
  Tensor<T> out({g.batch, g.ph * g.pw, g.h, g.w});
  kernels::cosine_correlation_forward(g, a.value().data(), b.value().data(), out.data());
  return record<T>("cosine_correlation", std::move(out), {a, b}, [g](Node<T>& self) {
    Node<T>& x = *self.inputs[0];
    Node<T>& y = *self.inputs[1];
    auto* ga = grad_slot(x);
    auto* gb = grad_slot(y);
    kernels::cosine_correlation_backward(g, x.value.data(), y.value.data(), self.grad.data(),
                                         ga ? ga->data() : nullptr, gb ? gb->data() : nullptr);
  });
}

template <typename T>
Var<T> homography_warp(const Var<T>& x, const std::vector<kernels::Mat3>& homographies,
                       int stride) {
  require_rank("homography_warp", x, 4);
  kernels::WarpGeometry g;
  g.batch = x.shape()[0];
  g.channels = x.shape()[1];
  g.h = x.shape()[2];
  g.w = x.shape()[3];
  g.stride = stride;
  if (homographies.size() != static_cast<std::size_t>(g.batch)) {
    throw ShapeError("homography_warp: one homography per batch item required");
  }
  Tensor<T> out(x.shape());
  kernels::homography_warp_forward(g, homographies.data(), x.value().data(), out.data());
  return record<T>("homography_warp", std::move(out), {x}, [g, homographies](Node<T>& self) {
    if (auto* gi = grad_slot(*self.inputs[0]))
      kernels::homography_warp_backward(g, homographies.data(), self.grad.data(), gi->data());
  });
}

#define WSCF_INSTANTIATE(T)                                                                    \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> div<T>(const Var<T>&, const Var<T>&);                                        \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                             \
  template Var<T> scale<T>(const Var<T>&, T);                                                  \
  template Var<T> relu<T>(const Var<T>&);                                                      \
  template Var<T> sigmoid<T>(const Var<T>&);                                                   \
  template Var<T> softplus<T>(const Var<T>&);                                                  \
  template Var<T> square<T>(const Var<T>&);                                                    \
  template Var<T> sum<T>(const Var<T>&);                                                       \
  template Var<T> sum_region<T>(const Var<T>&, int, int, int, int);                            \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                            \
  template Var<T> select<T>(const Var<T>&, int);                                               \
  template Var<T> stack<T>(const std::vector<Var<T>>&);                                        \
  template Var<T> concat_channels<T>(const std::vector<Var<T>>&);                              \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, ConvSpec);            \
  template Var<T> avg_pool<T>(const Var<T>&, int);                                             \
  template Var<T> global_avg_pool<T>(const Var<T>&);                                           \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                      \
  template Var<T> cosine_correlation<T>(const Var<T>&, const Var<T>&);                         \
  template Var<T> homography_warp<T>(const Var<T>&, const std::vector<kernels::Mat3>&, int);

WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)

#undef WSCF_INSTANTIATE

}  // namespace wscf
