#pragma once

// Compute kernels behind the differentiable ops. Every kernel has an
// OpenMP-parallel version in `wscf::kernels` and a plain serial version in
// `wscf::kernels::reference`; tests hold the two in agreement and the bench
// target times them against each other. Backward kernels accumulate (+=)
// into their output buffers.

#include <array>

namespace wscf::kernels {

struct ConvGeometry {
  int batch = 1;
  int in_channels = 1;
  int in_h = 1;
  int in_w = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int dilation = 1;

  int out_h() const { return (in_h + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1; }
};

/// Grid of feature cells whose centers sit at pixel s*u + (s-1)/2 of an image
/// s times larger; normalized coordinates follow 2p/(extent-1) - 1 on that
/// image. stride 1 is the plain align-corners convention on the grid itself.
struct WarpGeometry {
  int batch = 1;
  int channels = 1;
  int h = 1;
  int w = 1;
  int stride = 1;
};

using Mat3 = std::array<double, 9>;

struct CorrelationGeometry {
  int batch = 1;
  int channels = 1;
  int h = 1;  // query grid
  int w = 1;
  int ph = 1;  // pooled reference grid
  int pw = 1;
};

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight,
                            T* grad_bias);

/// out[n] = bilinear sample of in[n] at H[n] applied to each output cell center.
/// Taps outside the grid read as zero.
template <typename T>
void homography_warp_forward(const WarpGeometry& g, const Mat3* homographies, const T* in, T* out);
template <typename T>
void homography_warp_backward(const WarpGeometry& g, const Mat3* homographies, const T* grad_out,
                              T* grad_in);

/// Cosine similarity of every query cell against every reference cell:
/// out[n, q, y, x] = <a[n,:,y,x], b[n,:,q]> / (|a| |b|), 0 for zero-norm vectors.
template <typename T>
void cosine_correlation_forward(const CorrelationGeometry& g, const T* a, const T* b, T* out);
template <typename T>
void cosine_correlation_backward(const CorrelationGeometry& g, const T* a, const T* b,
                                 const T* grad_out, T* grad_a, T* grad_b);

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in);
template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight,
                            T* grad_bias);
template <typename T>
void homography_warp_forward(const WarpGeometry& g, const Mat3* homographies, const T* in, T* out);
template <typename T>
void homography_warp_backward(const WarpGeometry& g, const Mat3* homographies, const T* grad_out,
                              T* grad_in);
template <typename T>
void cosine_correlation_forward(const CorrelationGeometry& g, const T* a, const T* b, T* out);
template <typename T>
void cosine_correlation_backward(const CorrelationGeometry& g, const T* a, const T* b,
                                 const T* grad_out, T* grad_a, T* grad_b);

}  // namespace reference

// Shared sampling arithmetic, exposed for tests.
struct SamplePoint {
  double gx = 0;  // continuous grid coordinates of the sample
  double gy = 0;
  bool valid = false;  // false when the homogeneous coordinate vanishes
};

double cell_to_normalized(int cell, int cells, int stride);
double normalized_to_cell(double v, int cells, int stride);
SamplePoint warp_sample_point(const Mat3& h, int x, int y, int w, int hgt, int stride);

}  // namespace wscf::kernels
