#pragma once

#include <vector>

#include "wscf/substrate/autograd.hpp"
#include "wscf/substrate/kernels.hpp"

namespace wscf {

struct ConvSpec {
  int stride = 1;
  int pad = 1;
  int dilation = 1;
};

// Elementwise, shapes must match exactly.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> div(const Var<T>& a, const Var<T>& b);

template <typename T> Var<T> add_scalar(const Var<T>& a, T s);
template <typename T> Var<T> scale(const Var<T>& a, T s);

template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> softplus(const Var<T>& a);
template <typename T> Var<T> square(const Var<T>& a);

/// Sum of every entry, shape (1).
template <typename T> Var<T> sum(const Var<T>& a);
/// Sum over rows [y0, y1) and columns [x0, x1) of a 2-D map, shape (1).
template <typename T> Var<T> sum_region(const Var<T>& a, int y0, int y1, int x0, int x1);

template <typename T> Var<T> reshape(const Var<T>& a, Shape shape);
/// a[n] with the leading axis dropped.
template <typename T> Var<T> select(const Var<T>& a, int n);
/// New leading axis.
template <typename T> Var<T> stack(const std::vector<Var<T>>& parts);
/// Concatenates [N, C_k, H, W] tensors along the channel axis.
template <typename T> Var<T> concat_channels(const std::vector<Var<T>>& parts);

/// x [N, Cin, H, W], w [Cout, Cin, k, k], b [Cout].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, ConvSpec spec);
/// Non-overlapping k x k mean pooling; H and W must divide by k.
template <typename T> Var<T> avg_pool(const Var<T>& x, int k);
/// [N, C, H, W] -> [N, C]
template <typename T> Var<T> global_avg_pool(const Var<T>& x);
/// x [N, K], w [M, K], b [M] -> [N, M]
template <typename T> Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b);

/// a [N, C, h, w], b [N, C, ph, pw] -> [N, ph*pw, h, w] cosine similarities.
template <typename T> Var<T> cosine_correlation(const Var<T>& a, const Var<T>& b);

/// Bilinear homography resampling of [N, C, h, w] (one matrix per batch
/// item). Differentiable in the features only.
template <typename T>
Var<T> homography_warp(const Var<T>& x, const std::vector<kernels::Mat3>& homographies,
                       int stride);

}  // namespace wscf
