#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "wscf/geometry/homography.hpp"
#include "wscf/geometry/warp.hpp"
#include "wscf/substrate/grad_check.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::geometry {
namespace {

// Random well-conditioned homography: identity plus a bounded perturbation,
// rejected until cond < 100.
Homography planted_homography(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (;;) {
    kernels::Mat3 m{1 + u(rng), u(rng), u(rng), u(rng), 1 + u(rng), u(rng), 0.3 * u(rng), 0.3 * u(rng), 1};
    Eigen::Matrix3d e = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(m.data());
    const Eigen::Vector3d sv = e.jacobiSvd().singularValues();
    if (sv(0) / sv(2) < 100) return Homography::from_matrix(m);
  }
}

std::vector<Correspondence> sample_pairs(const Homography& h, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<Correspondence> out;
  while (static_cast<int>(out.size()) < n) {
    Point2 p{u(rng), u(rng)};
    auto q = apply_homography(h, p);
    if (!q.valid || std::abs(q.point.x) > 1.5 || std::abs(q.point.y) > 1.5) continue;
    out.push_back({p, q.point, static_cast<int>(out.size())});
  }
  return out;
}

double max_entry_diff(const Homography& a, const Homography& b) {
  double d = 0;
  for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(a.matrix()[i] - b.matrix()[i]));
  return d;
}

TEST(NormalizeCoords, CornersAndCenter) {
  auto a = normalize_coords({0, 0}, 64, 64);
  auto b = normalize_coords({63, 63}, 64, 64);
  auto c = normalize_coords({31.5, 31.5}, 64, 64);
  EXPECT_DOUBLE_EQ(a.x, -1);
  EXPECT_DOUBLE_EQ(b.y, 1);
  EXPECT_DOUBLE_EQ(c.x, 0);
  auto back = denormalize_coords(normalize_coords({12.25, 40}, 64, 48), 64, 48);
  EXPECT_NEAR(back.x, 12.25, 1e-12);
  EXPECT_NEAR(back.y, 40, 1e-12);
}

TEST(ApplyHomography, IdentityDummyTranslation) {
  Point2 p{0.3, -0.7};
  auto id = apply_homography(Homography::identity(), p);
  EXPECT_EQ(id.point.x, p.x);
  EXPECT_EQ(id.point.y, p.y);
  auto d = apply_homography(make_dummy(), p);
  EXPECT_EQ(d.point.x, -10);
  EXPECT_EQ(d.point.y, -10);
  auto t = apply_homography(Homography::from_matrix({1, 0, 0.5, 0, 1, 0, 0, 0, 1}), {0, 0});
  EXPECT_DOUBLE_EQ(t.point.x, 0.5);
  EXPECT_DOUBLE_EQ(t.point.y, 0);
  // vanishing third coordinate is flagged per point
  auto bad = apply_homography(Homography::from_matrix({1, 0, 0, 0, 1, 0, 1, 0, 1}), {-1, 0});
  EXPECT_FALSE(bad.valid);
}

TEST(Dummy, Detection) {
  EXPECT_TRUE(is_dummy(make_dummy()));
  EXPECT_FALSE(is_dummy(Homography::identity()));
  EXPECT_TRUE(is_dummy(Homography::from_matrix({0.1, -0.1, -9.9, 0.05, 0.1, -10.1, -0.1, 0.1, 1})));
  EXPECT_EQ(make_dummy()(2, 2), 1.0);
}

TEST(Dlt, IdentityFromFourPairs) {
  std::vector<Correspondence> pairs = {
      {{-0.5, -0.5}, {-0.5, -0.5}, 0}, {{0.5, -0.4}, {0.5, -0.4}, 1},
      {{0.6, 0.5}, {0.6, 0.5}, 2}, {{-0.4, 0.7}, {-0.4, 0.7}, 3}};
  EXPECT_LT(max_entry_diff(fit_homography_dlt(pairs), Homography::identity()), 1e-9);
}

TEST(Dlt, PlantAndRecover) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const Homography h = planted_homography(rng);
    const auto pairs = sample_pairs(h, 8, rng);
    const Homography fit = fit_homography_dlt(pairs);
    ASSERT_LT(max_entry_diff(fit, h), 1e-6) << "trial " << trial;
    for (const auto& c : pairs) {
      auto q = apply_homography(fit, c.in_i);
      EXPECT_LT(std::hypot(q.point.x - c.in_j.x, q.point.y - c.in_j.y), 1e-6);
    }
  }
}

TEST(Dlt, PermutationInvariant) {
  std::mt19937_64 rng(3);
  const Homography h = planted_homography(rng);
  auto pairs = sample_pairs(h, 12, rng);
  // perturb so the fit is a genuine least-squares solution
  std::normal_distribution<double> noise(0, 0.01);
  for (auto& c : pairs) c.in_j.x += noise(rng);
  const Homography a = fit_homography_dlt(pairs);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const Homography b = fit_homography_dlt(pairs);
  EXPECT_LT(max_entry_diff(a, b), 1e-9);
}

TEST(Dlt, Errors) {
  std::vector<Correspondence> three = {{{0, 0}, {0, 0}, 0}, {{1, 0}, {1, 0}, 1}, {{0, 1}, {0, 1}, 2}};
  EXPECT_THROW(fit_homography_dlt(three), InsufficientCorrespondences);
  std::vector<Correspondence> collinear;
  for (int k = 0; k < 5; ++k) collinear.push_back({{0.2 * k - 0.5, 0.1 * k}, {0.2 * k - 0.5, 0.1 * k}, k});
  EXPECT_THROW(fit_homography_dlt(collinear), DegenerateConfiguration);
  auto dup = three;
  dup.push_back({{0.5, 0.5}, {0.5, 0.5}, 1});
  EXPECT_THROW(fit_homography_dlt(dup), std::invalid_argument);
  auto far = three;
  far.push_back({{2.0, 0.5}, {0.5, 0.5}, 3});
  EXPECT_THROW(fit_homography_dlt(far), std::invalid_argument);
}

TEST(Homography, InverseAndCompose) {
  std::mt19937_64 rng(8);
  const Homography h = planted_homography(rng);
  EXPECT_LT(max_entry_diff(h.compose(h.inverse()), Homography::identity()), 1e-12);
  EXPECT_EQ(h.free_entries()[0], h(0, 0));
}

Tensor<double> smooth_map(int h, int w) {
  Tensor<double> t({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      t.at(y, x) = std::exp(-((x - 7.3) * (x - 7.3) + (y - 8.1) * (y - 8.1)) / (2 * 3.0 * 3.0)) +
                   0.5 * std::exp(-((x - 11.0) * (x - 11.0) + (y - 4.0) * (y - 4.0)) / (2 * 2.5 * 2.5));
  return t;
}

TEST(WarpFeatures, IdentityExactDummyZero) {
  Tensor<double> f({3, 16, 16});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (auto& v : f.values()) v = n(rng);
  auto same = warp_features(constant(f), Homography::identity());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(same.value()[i], f[i]);
  auto zero = warp_features(constant(f), make_dummy());
  for (double v : zero.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(WarpFeatures, OneCellTranslationMovesImpulse) {
  Tensor<double> f({16, 16});
  f.at(6, 5) = 1.0;
  const double cell = 2.0 * kFeatureStride / (16.0 * kFeatureStride - 1);
  auto out = warp_features(constant(f), Homography::from_matrix({1, 0, cell, 0, 1, 0, 0, 0, 1}));
  EXPECT_NEAR(out.value().at(6, 4), 1.0, 1e-9);
  EXPECT_NEAR(out.value().sum(), 1.0, 1e-9);
}

TEST(WarpFeatures, InverseRoundTripOnSmoothMap) {
  const Tensor<double> f = smooth_map(16, 16);
  const Homography h = Homography::from_matrix({0.95, 0.05, 0.04, -0.04, 1.02, -0.03, 0.03, -0.02, 1});
  auto back = warp_features(warp_features(constant(f), h), h.inverse());
  double l1 = 0;
  int cells = 0;
  for (int y = 2; y < 14; ++y)
    for (int x = 2; x < 14; ++x, ++cells) l1 += std::abs(back.value().at(y, x) - f.at(y, x));
  EXPECT_LT(l1 / cells, 1e-2);
}

TEST(WarpFeatures, GradientMatchesFiniteDifferences) {
  const Homography h = Homography::from_matrix({0.9, 0.1, 0.07, -0.05, 1.1, 0.02, 0.04, 0.03, 1});
  Tensor<double> weights = smooth_map(8, 8);
  auto f = [&](const Var<double>& x) {
    return sum(mul(warp_features(x, h), constant(weights)));
  };
  Tensor<double> x0({8, 8});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : x0.values()) v = u(rng);
  EXPECT_LT(grad_check(f, x0).max_relative_error, 1e-4);
}

}  // namespace
}  // namespace wscf::geometry
