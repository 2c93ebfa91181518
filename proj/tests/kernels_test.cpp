#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "wscf/substrate/kernels.hpp"

namespace wscf::kernels {
namespace {

std::vector<double> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << "index " << i;
}

class ConvAgreement : public ::testing::TestWithParam<ConvGeometry> {};

TEST_P(ConvAgreement, ParallelMatchesReference) {
  const ConvGeometry g = GetParam();
  const std::size_t in_n = static_cast<std::size_t>(g.batch) * g.in_channels * g.in_h * g.in_w;
  const std::size_t w_n = static_cast<std::size_t>(g.out_channels) * g.in_channels * g.kernel * g.kernel;
  const std::size_t out_n = static_cast<std::size_t>(g.batch) * g.out_channels * g.out_h() * g.out_w();
  auto in = random_buffer(in_n, 1), w = random_buffer(w_n, 2), b = random_buffer(g.out_channels, 3);
  auto go = random_buffer(out_n, 4);

  std::vector<double> out_p(out_n), out_r(out_n);
  conv2d_forward(g, in.data(), w.data(), b.data(), out_p.data());
  reference::conv2d_forward(g, in.data(), w.data(), b.data(), out_r.data());
  expect_close(out_p, out_r, 1e-10);

  std::vector<double> gi_p(in_n), gi_r(in_n);
  conv2d_backward_input(g, go.data(), w.data(), gi_p.data());
  reference::conv2d_backward_input(g, go.data(), w.data(), gi_r.data());
  expect_close(gi_p, gi_r, 1e-10);

  std::vector<double> gw_p(w_n), gw_r(w_n), gb_p(g.out_channels), gb_r(g.out_channels);
  conv2d_backward_weight(g, in.data(), go.data(), gw_p.data(), gb_p.data());
  reference::conv2d_backward_weight(g, in.data(), go.data(), gw_r.data(), gb_r.data());
  expect_close(gw_p, gw_r, 1e-10);
  expect_close(gb_p, gb_r, 1e-10);
}

ConvGeometry conv(int n, int cin, int h, int w, int cout, int k, int s, int p, int d) {
  return ConvGeometry{n, cin, h, w, cout, k, s, p, d};
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvAgreement,
                         ::testing::Values(conv(2, 3, 9, 7, 4, 3, 1, 1, 1), conv(1, 2, 16, 16, 5, 3, 2, 1, 1),
                                           conv(3, 4, 12, 12, 3, 3, 1, 2, 2), conv(2, 64, 32, 32, 48, 3, 1, 1, 1),
                                           conv(1, 3, 8, 8, 2, 1, 1, 0, 1)));

TEST(WarpAgreement, ParallelMatchesReference) {
  WarpGeometry g{3, 5, 12, 10, 4};
  std::vector<Mat3> hs = {{1, 0, 0, 0, 1, 0, 0, 0, 1},
                          {0.9, 0.15, 0.05, -0.1, 1.1, -0.2, 0.05, -0.03, 1},
                          {0, 0, -10, 0, 0, -10, 0, 0, 1}};
  const std::size_t n = 3 * 5 * 12 * 10;
  auto in = random_buffer(n, 5), go = random_buffer(n, 6);
  std::vector<double> p(n), r(n);
  homography_warp_forward(g, hs.data(), in.data(), p.data());
  reference::homography_warp_forward(g, hs.data(), in.data(), r.data());
  expect_close(p, r, 1e-12);
  // identity samples grid centers exactly, dummy lands nowhere
  for (std::size_t i = 0; i < n / 3; ++i) EXPECT_EQ(p[i], in[i]);
  for (std::size_t i = 2 * n / 3; i < n; ++i) EXPECT_EQ(p[i], 0.0);

  std::vector<double> gp(n), gr(n);
  homography_warp_backward(g, hs.data(), go.data(), gp.data());
  reference::homography_warp_backward(g, hs.data(), go.data(), gr.data());
  expect_close(gp, gr, 1e-12);
}

TEST(CorrelationAgreement, ParallelMatchesReference) {
  CorrelationGeometry g{2, 6, 9, 7, 3, 4};
  auto a = random_buffer(2 * 6 * 63, 7), b = random_buffer(2 * 6 * 12, 8);
  a[5] = 0;  // exercise a zero-norm fiber
  for (int c = 0; c < 6; ++c) a[c * 63 + 4] = 0;
  const std::size_t out_n = 2 * 12 * 63;
  std::vector<double> p(out_n), r(out_n);
  cosine_correlation_forward(g, a.data(), b.data(), p.data());
  reference::cosine_correlation_forward(g, a.data(), b.data(), r.data());
  expect_close(p, r, 1e-12);
  for (int q = 0; q < 12; ++q) EXPECT_EQ(p[q * 63 + 4], 0.0);

  auto go = random_buffer(out_n, 9);
  std::vector<double> ga_p(a.size()), ga_r(a.size()), gb_p(b.size()), gb_r(b.size());
  cosine_correlation_backward(g, a.data(), b.data(), go.data(), ga_p.data(), gb_p.data());
  reference::cosine_correlation_backward(g, a.data(), b.data(), go.data(), ga_r.data(), gb_r.data());
  expect_close(ga_p, ga_r, 1e-10);
  expect_close(gb_p, gb_r, 1e-10);
}

TEST(SampleArithmetic, CellCentersRoundTrip) {
  for (int s : {1, 4})
    for (int u = 0; u < 16; ++u) EXPECT_EQ(normalized_to_cell(cell_to_normalized(u, 16, s), 16, s), u);
  // stride-4 cell 0 is pixel 1.5 of a 64-pixel image
  EXPECT_DOUBLE_EQ(cell_to_normalized(0, 16, 4), 2 * 1.5 / 63 - 1);
}

}  // namespace
}  // namespace wscf::kernels
