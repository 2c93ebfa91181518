#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "wscf/substrate/kernels.hpp"

namespace wscf::kernels {

namespace {

constexpr int kColumnBlock = 256;
constexpr long kParallelThreshold = 1L << 15;

template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  const int rows = g.in_channels * k * k;
#pragma omp parallel for schedule(static) if (static_cast<long>(rows) * oh * ow > kParallelThreshold)
  for (int r = 0; r < rows; ++r) {
    const int ci = r / (k * k), ky = (r / k) % k, kx = r % k;
    const T* src = in + static_cast<long>(ci) * g.in_h * g.in_w;
    T* dst = col + static_cast<long>(r) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      const int iy = oy * g.stride - g.pad + ky * g.dilation;
      T* row = dst + oy * ow;
      if (iy < 0 || iy >= g.in_h) {
        std::fill(row, row + ow, T{0});
        continue;
      }
      const T* srow = src + iy * g.in_w;
      for (int ox = 0; ox < ow; ++ox) {
        const int ix = ox * g.stride - g.pad + kx * g.dilation;
        row[ox] = (ix >= 0 && ix < g.in_w) ? srow[ix] : T{0};
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* grad_in) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  // each input channel owns its plane, so channels are independent
#pragma omp parallel for schedule(static) if (static_cast<long>(g.in_channels) * k * k * oh * ow > kParallelThreshold)
  for (int ci = 0; ci < g.in_channels; ++ci) {
    T* dst = grad_in + static_cast<long>(ci) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + static_cast<long>((ci * k + ky) * k + kx) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * g.stride - g.pad + ky * g.dilation;
          if (iy < 0 || iy >= g.in_h) continue;
          T* drow = dst + iy * g.in_w;
          const T* srow = src + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * g.stride - g.pad + kx * g.dilation;
            if (ix >= 0 && ix < g.in_w) drow[ix] += srow[ox];
          }
        }
      }
  }
}

// C[M x N] += A[M x K] * B[K x N], column-blocked so a panel of B stays in cache.
template <typename T>
void gemm_nn_add(int M, int N, int K, const T* A, const T* B, T* C) {
  for (int n0 = 0; n0 < N; n0 += kColumnBlock) {
    const int nb = std::min(kColumnBlock, N - n0);
#pragma omp parallel for schedule(static) if (static_cast<long>(M) * N * K > kParallelThreshold)
    for (int m = 0; m < M; ++m) {
      T* crow = C + static_cast<long>(m) * N + n0;
      const T* arow = A + static_cast<long>(m) * K;
      for (int kk = 0; kk < K; ++kk) {
        const T a = arow[kk];
        if (a == T{0}) continue;
        const T* brow = B + static_cast<long>(kk) * N + n0;
#pragma omp simd
        for (int n = 0; n < nb; ++n) crow[n] += a * brow[n];
      }
    }
  }
}

// C[M x K] += A[M x N] * B[K x N]^T
template <typename T>
void gemm_nt_add(int M, int K, int N, const T* A, const T* B, T* C) {
#pragma omp parallel for schedule(static) if (static_cast<long>(M) * N * K > kParallelThreshold)
  for (int m = 0; m < M; ++m) {
    const T* arow = A + static_cast<long>(m) * N;
    for (int kk = 0; kk < K; ++kk) {
      const T* brow = B + static_cast<long>(kk) * N;
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (int n = 0; n < N; ++n) acc += arow[n] * brow[n];
      C[static_cast<long>(m) * K + kk] += acc;
    }
  }
}

// C[K x N] += A[M x K]^T * B[M x N]
template <typename T>
void gemm_tn_add(int K, int N, int M, const T* A, const T* B, T* C) {
  for (int n0 = 0; n0 < N; n0 += kColumnBlock) {
    const int nb = std::min(kColumnBlock, N - n0);
#pragma omp parallel for schedule(static) if (static_cast<long>(M) * N * K > kParallelThreshold)
    for (int kk = 0; kk < K; ++kk) {
      T* crow = C + static_cast<long>(kk) * N + n0;
      for (int m = 0; m < M; ++m) {
        const T a = A[static_cast<long>(m) * K + kk];
        if (a == T{0}) continue;
        const T* brow = B + static_cast<long>(m) * N + n0;
#pragma omp simd
        for (int n = 0; n < nb; ++n) crow[n] += a * brow[n];
      }
    }
  }
}

template <typename T>
std::vector<T>& scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const int oh = g.out_h(), ow = g.out_w();
  const int cols = oh * ow, rows = g.in_channels * g.kernel * g.kernel;
  auto& col = scratch<T>();
  col.resize(static_cast<std::size_t>(rows) * cols);
  for (int n = 0; n < g.batch; ++n) {
    const T* src = in + static_cast<long>(n) * g.in_channels * g.in_h * g.in_w;
    T* dst = out + static_cast<long>(n) * g.out_channels * cols;
    for (int co = 0; co < g.out_channels; ++co)
      std::fill(dst + static_cast<long>(co) * cols, dst + static_cast<long>(co + 1) * cols,
                bias ? bias[co] : T{0});
    im2col(g, src, col.data());
    gemm_nn_add(g.out_channels, cols, rows, weight, col.data(), dst);
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  const int oh = g.out_h(), ow = g.out_w();
  const int cols = oh * ow, rows = g.in_channels * g.kernel * g.kernel;
  auto& col = scratch<T>();
  for (int n = 0; n < g.batch; ++n) {
    col.assign(static_cast<std::size_t>(rows) * cols, T{0});
    gemm_tn_add(rows, cols, g.out_channels, weight,
                grad_out + static_cast<long>(n) * g.out_channels * cols, col.data());
    col2im_add(g, col.data(), grad_in + static_cast<long>(n) * g.in_channels * g.in_h * g.in_w);
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight,
                            T* grad_bias) {
  const int oh = g.out_h(), ow = g.out_w();
  const int cols = oh * ow, rows = g.in_channels * g.kernel * g.kernel;
  auto& col = scratch<T>();
  col.resize(static_cast<std::size_t>(rows) * cols);
  for (int n = 0; n < g.batch; ++n) {
    const T* go = grad_out + static_cast<long>(n) * g.out_channels * cols;
    im2col(g, in + static_cast<long>(n) * g.in_channels * g.in_h * g.in_w, col.data());
    gemm_nt_add(g.out_channels, rows, cols, go, col.data(), grad_weight);
    if (grad_bias) {
      for (int co = 0; co < g.out_channels; ++co) {
        T acc = 0;
        const T* row = go + static_cast<long>(co) * cols;
#pragma omp simd reduction(+ : acc)
        for (int i = 0; i < cols; ++i) acc += row[i];
        grad_bias[co] += acc;
      }
    }
  }
}

namespace {

struct Taps {
  int idx[4];
  double wt[4];
  int count = 0;
};

Taps make_taps(const SamplePoint& s, int w, int h) {
  Taps t;
  if (!s.valid || s.gx <= -1.0 || s.gy <= -1.0 || s.gx >= w || s.gy >= h) return t;
  const double fx = std::floor(s.gx), fy = std::floor(s.gy);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = s.gx - fx, ay = s.gy - fy;
  const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int i = 0; i < 4; ++i) {
    if (wts[i] == 0.0 || xs[i] < 0 || xs[i] >= w || ys[i] < 0 || ys[i] >= h) continue;
    t.idx[t.count] = ys[i] * w + xs[i];
    t.wt[t.count] = wts[i];
    ++t.count;
  }
  return t;
}

std::vector<Taps> sampling_plan(const WarpGeometry& g, const Mat3& h) {
  std::vector<Taps> plan(static_cast<std::size_t>(g.h) * g.w);
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x)
      plan[y * g.w + x] = make_taps(warp_sample_point(h, x, y, g.w, g.h, g.stride), g.w, g.h);
  return plan;
}

}  // namespace

template <typename T>
void homography_warp_forward(const WarpGeometry& g, const Mat3* homographies, const T* in, T* out) {
  const int plane = g.h * g.w;
  for (int n = 0; n < g.batch; ++n) {
    const auto plan = sampling_plan(g, homographies[n]);
#pragma omp parallel for schedule(static) if (static_cast<long>(g.channels) * plane > kParallelThreshold)
    for (int c = 0; c < g.channels; ++c) {
      const T* src = in + (static_cast<long>(n) * g.channels + c) * plane;
      T* dst = out + (static_cast<long>(n) * g.channels + c) * plane;
      for (int p = 0; p < plane; ++p) {
        const Taps& t = plan[p];
        double acc = 0;
        for (int i = 0; i < t.count; ++i) acc += t.wt[i] * src[t.idx[i]];
        dst[p] = static_cast<T>(acc);
      }
    }
  }
}

template <typename T>
void homography_warp_backward(const WarpGeometry& g, const Mat3* homographies, const T* grad_out,
                              T* grad_in) {
  const int plane = g.h * g.w;
  for (int n = 0; n < g.batch; ++n) {
    const auto plan = sampling_plan(g, homographies[n]);
#pragma omp parallel for schedule(static) if (static_cast<long>(g.channels) * plane > kParallelThreshold)
    for (int c = 0; c < g.channels; ++c) {
      const T* go = grad_out + (static_cast<long>(n) * g.channels + c) * plane;
      T* gi = grad_in + (static_cast<long>(n) * g.channels + c) * plane;
      for (int p = 0; p < plane; ++p) {
        const Taps& t = plan[p];
        for (int i = 0; i < t.count; ++i) gi[t.idx[i]] += static_cast<T>(t.wt[i]) * go[p];
      }
    }
  }
}

namespace {

// Unit vectors per cell laid out [cells x C]; zero rows for zero-norm cells.
template <typename T>
void normalize_cells(const T* x, int C, int cells, std::vector<double>& unit,
                     std::vector<double>& norm) {
  unit.assign(static_cast<std::size_t>(cells) * C, 0.0);
  norm.assign(cells, 0.0);
  for (int c = 0; c < C; ++c)
    for (int p = 0; p < cells; ++p) {
      const double v = x[static_cast<long>(c) * cells + p];
      norm[p] += v * v;
    }
  for (int p = 0; p < cells; ++p) {
    norm[p] = std::sqrt(norm[p]);
    if (norm[p] <= 1e-6) {
      norm[p] = 0;
      continue;
    }
    for (int c = 0; c < C; ++c) unit[static_cast<long>(p) * C + c] = x[static_cast<long>(c) * cells + p] / norm[p];
  }
}

}  // namespace

template <typename T>
void cosine_correlation_forward(const CorrelationGeometry& g, const T* a, const T* b, T* out) {
  const int hw = g.h * g.w, pq = g.ph * g.pw, C = g.channels;
  std::vector<double> ua, na, ub, nb;
  for (int n = 0; n < g.batch; ++n) {
    normalize_cells(a + static_cast<long>(n) * C * hw, C, hw, ua, na);
    normalize_cells(b + static_cast<long>(n) * C * pq, C, pq, ub, nb);
    T* dst = out + static_cast<long>(n) * pq * hw;
#pragma omp parallel for schedule(static) if (static_cast<long>(pq) * hw * C > kParallelThreshold)
    for (int q = 0; q < pq; ++q) {
      const double* bq = ub.data() + static_cast<long>(q) * C;
      for (int p = 0; p < hw; ++p) {
        const double* ap = ua.data() + static_cast<long>(p) * C;
        double dot = 0;
#pragma omp simd reduction(+ : dot)
        for (int c = 0; c < C; ++c) dot += ap[c] * bq[c];
        dst[static_cast<long>(q) * hw + p] = static_cast<T>(dot);
      }
    }
  }
}

template <typename T>
void cosine_correlation_backward(const CorrelationGeometry& g, const T* a, const T* b,
                                 const T* grad_out, T* grad_a, T* grad_b) {
  const int hw = g.h * g.w, pq = g.ph * g.pw, C = g.channels;
  std::vector<double> ua, na, ub, nb, gua, gub;
  for (int n = 0; n < g.batch; ++n) {
    normalize_cells(a + static_cast<long>(n) * C * hw, C, hw, ua, na);
    normalize_cells(b + static_cast<long>(n) * C * pq, C, pq, ub, nb);
    const T* go = grad_out + static_cast<long>(n) * pq * hw;
    // gradient w.r.t. the unit vectors, then project out the radial part
    gua.assign(static_cast<std::size_t>(hw) * C, 0.0);
    gub.assign(static_cast<std::size_t>(pq) * C, 0.0);
#pragma omp parallel for schedule(static) if (static_cast<long>(pq) * hw * C > kParallelThreshold)
    for (int p = 0; p < hw; ++p) {
      double* gp = gua.data() + static_cast<long>(p) * C;
      for (int q = 0; q < pq; ++q) {
        const double gv = go[static_cast<long>(q) * hw + p];
        const double* bq = ub.data() + static_cast<long>(q) * C;
        for (int c = 0; c < C; ++c) gp[c] += gv * bq[c];
      }
    }
#pragma omp parallel for schedule(static) if (static_cast<long>(pq) * hw * C > kParallelThreshold)
    for (int q = 0; q < pq; ++q) {
      double* gq = gub.data() + static_cast<long>(q) * C;
      for (int p = 0; p < hw; ++p) {
        const double gv = go[static_cast<long>(q) * hw + p];
        const double* ap = ua.data() + static_cast<long>(p) * C;
        for (int c = 0; c < C; ++c) gq[c] += gv * ap[c];
      }
    }
    auto project = [C](const std::vector<double>& unit, const std::vector<double>& norm,
                       const std::vector<double>& gu, int cells, T* gx) {
      for (int p = 0; p < cells; ++p) {
        if (norm[p] == 0) continue;
        const double* u = unit.data() + static_cast<long>(p) * C;
        const double* gp = gu.data() + static_cast<long>(p) * C;
        double radial = 0;
        for (int c = 0; c < C; ++c) radial += gp[c] * u[c];
        for (int c = 0; c < C; ++c)
          gx[static_cast<long>(c) * cells + p] += static_cast<T>((gp[c] - radial * u[c]) / norm[p]);
      }
    };
    if (grad_a) project(ua, na, gua, hw, grad_a + static_cast<long>(n) * C * hw);
    if (grad_b) project(ub, nb, gub, pq, grad_b + static_cast<long>(n) * C * pq);
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

}  // namespace wscf::kernels
