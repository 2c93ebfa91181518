#include <cmath>
#include <vector>

#include "wscf/substrate/kernels.hpp"

namespace wscf::kernels::reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          T acc = bias ? bias[co] : T{0};
          for (int ci = 0; ci < g.in_channels; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky * g.dilation;
                const int ix = ox * g.stride - g.pad + kx * g.dilation;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                acc += weight[((co * g.in_channels + ci) * k + ky) * k + kx] *
                       in[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
          out[((n * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T go = grad_out[((n * g.out_channels + co) * oh + oy) * ow + ox];
          for (int ci = 0; ci < g.in_channels; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky * g.dilation;
                const int ix = ox * g.stride - g.pad + kx * g.dilation;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                grad_in[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix] +=
                    go * weight[((co * g.in_channels + ci) * k + ky) * k + kx];
              }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight,
                            T* grad_bias) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int n = 0; n < g.batch; ++n)
    for (int co = 0; co < g.out_channels; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const T go = grad_out[((n * g.out_channels + co) * oh + oy) * ow + ox];
          if (grad_bias) grad_bias[co] += go;
          for (int ci = 0; ci < g.in_channels; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * g.stride - g.pad + ky * g.dilation;
                const int ix = ox * g.stride - g.pad + kx * g.dilation;
                if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
                grad_weight[((co * g.in_channels + ci) * k + ky) * k + kx] +=
                    go * in[((n * g.in_channels + ci) * g.in_h + iy) * g.in_w + ix];
              }
        }
}

namespace {

// Visits the four bilinear taps of a sample; taps off the grid are skipped.
template <typename Fn>
void for_each_tap(const SamplePoint& s, int w, int h, Fn&& fn) {
  if (!s.valid) return;
  if (s.gx <= -1.0 || s.gy <= -1.0 || s.gx >= w || s.gy >= h) return;
  const double fx = std::floor(s.gx), fy = std::floor(s.gy);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = s.gx - fx, ay = s.gy - fy;
  const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int t = 0; t < 4; ++t) {
    if (wts[t] == 0.0) continue;
    if (xs[t] < 0 || xs[t] >= w || ys[t] < 0 || ys[t] >= h) continue;
    fn(ys[t] * w + xs[t], wts[t]);
  }
}

}  // namespace

template <typename T>
void homography_warp_forward(const WarpGeometry& g, const Mat3* homographies, const T* in, T* out) {
  const int plane = g.h * g.w;
  for (int n = 0; n < g.batch; ++n)
    for (int c = 0; c < g.channels; ++c) {
      const T* src = in + (static_cast<long>(n) * g.channels + c) * plane;
      T* dst = out + (static_cast<long>(n) * g.channels + c) * plane;
      for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
          const SamplePoint s = warp_sample_point(homographies[n], x, y, g.w, g.h, g.stride);
          double acc = 0;
          for_each_tap(s, g.w, g.h, [&](int idx, double wt) { acc += wt * src[idx]; });
          dst[y * g.w + x] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void homography_warp_backward(const WarpGeometry& g, const Mat3* homographies, const T* grad_out,
                              T* grad_in) {
  const int plane = g.h * g.w;
  for (int n = 0; n < g.batch; ++n)
    for (int c = 0; c < g.channels; ++c) {
      const T* go = grad_out + (static_cast<long>(n) * g.channels + c) * plane;
      T* gi = grad_in + (static_cast<long>(n) * g.channels + c) * plane;
      for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x) {
          const SamplePoint s = warp_sample_point(homographies[n], x, y, g.w, g.h, g.stride);
          const T v = go[y * g.w + x];
          for_each_tap(s, g.w, g.h, [&](int idx, double wt) { gi[idx] += static_cast<T>(wt) * v; });
        }
    }
}

template <typename T>
void cosine_correlation_forward(const CorrelationGeometry& g, const T* a, const T* b, T* out) {
  const int hw = g.h * g.w, pq = g.ph * g.pw;
  for (int n = 0; n < g.batch; ++n)
    for (int q = 0; q < pq; ++q)
      for (int p = 0; p < hw; ++p) {
        double dot = 0, na = 0, nb = 0;
        for (int c = 0; c < g.channels; ++c) {
          const double av = a[(static_cast<long>(n) * g.channels + c) * hw + p];
          const double bv = b[(static_cast<long>(n) * g.channels + c) * pq + q];
          dot += av * bv;
          na += av * av;
          nb += bv * bv;
        }
        const double la = std::sqrt(na), lb = std::sqrt(nb);
        out[(static_cast<long>(n) * pq + q) * hw + p] =
            (la > 1e-6 && lb > 1e-6) ? static_cast<T>(dot / (la * lb)) : T{0};
      }
}

template <typename T>
void cosine_correlation_backward(const CorrelationGeometry& g, const T* a, const T* b,
                                 const T* grad_out, T* grad_a, T* grad_b) {
  const int hw = g.h * g.w, pq = g.ph * g.pw, C = g.channels;
  std::vector<double> av(C), bv(C);
  for (int n = 0; n < g.batch; ++n)
    for (int q = 0; q < pq; ++q)
      for (int p = 0; p < hw; ++p) {
        double dot = 0, na = 0, nb = 0;
        for (int c = 0; c < C; ++c) {
          av[c] = a[(static_cast<long>(n) * C + c) * hw + p];
          bv[c] = b[(static_cast<long>(n) * C + c) * pq + q];
          dot += av[c] * bv[c];
          na += av[c] * av[c];
          nb += bv[c] * bv[c];
        }
        const double la = std::sqrt(na), lb = std::sqrt(nb);
        if (la <= 1e-6 || lb <= 1e-6) continue;
        const double go = grad_out[(static_cast<long>(n) * pq + q) * hw + p];
        const double cosv = dot / (la * lb);
        for (int c = 0; c < C; ++c) {
          // d cos / d a = b/(|a||b|) - cos a/|a|^2
          if (grad_a)
            grad_a[(static_cast<long>(n) * C + c) * hw + p] +=
                static_cast<T>(go * (bv[c] / (la * lb) - cosv * av[c] / na));
          if (grad_b)
            grad_b[(static_cast<long>(n) * C + c) * pq + q] +=
                static_cast<T>(go * (av[c] / (la * lb) - cosv * bv[c] / nb));
        }
      }
}

#define WSCF_INSTANTIATE(T)                                                                     \
  template void conv2d_forward<T>(const ConvGeometry&, const T*, const T*, const T*, T*);       \
  template void conv2d_backward_input<T>(const ConvGeometry&, const T*, const T*, T*);          \
  template void conv2d_backward_weight<T>(const ConvGeometry&, const T*, const T*, T*, T*);     \
  template void homography_warp_forward<T>(const WarpGeometry&, const Mat3*, const T*, T*);     \
  template void homography_warp_backward<T>(const WarpGeometry&, const Mat3*, const T*, T*);    \
  template void cosine_correlation_forward<T>(const CorrelationGeometry&, const T*, const T*,   \
                                              T*);                                              \
  template void cosine_correlation_backward<T>(const CorrelationGeometry&, const T*, const T*,  \
                                               const T*, T*, T*);

WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)

#undef WSCF_INSTANTIATE

}  // namespace wscf::kernels::reference
