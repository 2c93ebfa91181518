#include "wscf/geometry/homography.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace wscf::geometry {

namespace {

using Mat3d = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;

Mat3d to_eigen(const kernels::Mat3& m) { return Eigen::Map<const Mat3d>(m.data()); }

kernels::Mat3 from_eigen(const Mat3d& e) {
  kernels::Mat3 m;
  Eigen::Map<Mat3d>(m.data()) = e;
  return m;
}

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Mat3d hartley_transform(std::span<const Point2> pts) {
  double cx = 0, cy = 0;
  for (const auto& p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= pts.size();
  cy /= pts.size();
  double mean_dist = 0;
  for (const auto& p : pts) mean_dist += std::hypot(p.x - cx, p.y - cy);
  mean_dist /= pts.size();
  if (mean_dist < 1e-12) throw DegenerateConfiguration("all correspondence points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Mat3d t;
  t << s, 0, -s * cx, 0, s, -s * cy, 0, 0, 1;
  return t;
}

Point2 transform(const Mat3d& t, Point2 p) {
  return {t(0, 0) * p.x + t(0, 2), t(1, 1) * p.y + t(1, 2)};
}

}  // namespace

Homography Homography::identity() { return Homography(kernels::Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1}); }

Homography Homography::from_matrix(const kernels::Mat3& m) {
  if (std::abs(m[8]) < 1e-12) {
    throw std::invalid_argument("homography bottom-right entry is zero; cannot normalize");
  }
  kernels::Mat3 out;
  for (int i = 0; i < 9; ++i) out[i] = m[i] / m[8];
  out[8] = 1.0;
  return Homography(out);
}

Homography Homography::from_free_entries(std::span<const double, 8> v) {
  kernels::Mat3 m;
  std::copy(v.begin(), v.end(), m.begin());
  m[8] = 1.0;
  return Homography(m);
}

std::array<double, 8> Homography::free_entries() const {
  std::array<double, 8> v;
  std::copy_n(m_.begin(), 8, v.begin());
  return v;
}

double Homography::determinant() const { return to_eigen(m_).determinant(); }

Homography Homography::inverse() const {
  if (std::abs(determinant()) <= 1e-12) throw std::invalid_argument("homography is singular");
  return from_matrix(from_eigen(to_eigen(m_).inverse()));
}

Homography Homography::compose(const Homography& other) const {
  return from_matrix(from_eigen(to_eigen(m_) * to_eigen(other.m_)));
}

ProjectedPoint apply_homography(const Homography& h, Point2 p) {
  const auto& m = h.matrix();
  const double z = m[6] * p.x + m[7] * p.y + m[8];
  ProjectedPoint out;
  if (std::abs(z) < 1e-12) return out;
  out.point = {(m[0] * p.x + m[1] * p.y + m[2]) / z, (m[3] * p.x + m[4] * p.y + m[5]) / z};
  out.valid = true;
  return out;
}

std::vector<ProjectedPoint> apply_homography(const Homography& h, std::span<const Point2> points) {
  std::vector<ProjectedPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(apply_homography(h, p));
  return out;
}

Point2 normalize_coords(Point2 pixel, int width, int height) {
  return {2.0 * pixel.x / (width - 1) - 1.0, 2.0 * pixel.y / (height - 1) - 1.0};
}

Point2 denormalize_coords(Point2 normalized, int width, int height) {
  return {(normalized.x + 1.0) * (width - 1) * 0.5, (normalized.y + 1.0) * (height - 1) * 0.5};
}

Homography make_dummy() { return Homography::from_matrix({0, 0, -10, 0, 0, -10, 0, 0, 1}); }

bool is_dummy(const Homography& h) {
  const kernels::Mat3 d = make_dummy().matrix();
  double worst = 0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, std::abs(h.matrix()[i] - d[i]));
  return worst < 0.5;
}

Homography fit_homography_dlt(std::span<const Correspondence> pairs) {
  if (pairs.size() < 4) {
    throw InsufficientCorrespondences("DLT needs at least 4 correspondences, got " +
                                      std::to_string(pairs.size()));
  }
  std::set<int> ids;
  std::vector<Point2> src, dst;
  for (const auto& c : pairs) {
    if (!ids.insert(c.person_id).second) {
      throw std::invalid_argument("duplicate person id " + std::to_string(c.person_id));
    }
    for (double v : {c.in_i.x, c.in_i.y, c.in_j.x, c.in_j.y}) {
      if (!(std::abs(v) <= 1.5)) throw std::invalid_argument("correspondence outside [-1.5, 1.5]");
    }
    src.push_back(c.in_i);
    dst.push_back(c.in_j);
  }

  const Mat3d ts = hartley_transform(src);
  const Mat3d td = hartley_transform(dst);
  const Eigen::Index n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(2 * n, 9), 9);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Point2 p = transform(ts, src[k]);
    const Point2 q = transform(td, dst[k]);
    a.row(2 * k) << -p.x, -p.y, -1, 0, 0, 0, q.x * p.x, q.x * p.y, q.x;
    a.row(2 * k + 1) << 0, 0, 0, -p.x, -p.y, -1, q.y * p.x, q.y * p.y, q.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // the system must have rank 8: a second null direction means degeneracy
  if (sv(7) < 1e-8 * sv(0)) {
    throw DegenerateConfiguration("correspondences do not determine a unique homography");
  }
  Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Mat3d hn = Eigen::Map<Mat3d>(h.data());
  Mat3d full = td.inverse() * hn * ts;
  if (std::abs(full(2, 2)) < 1e-12 || std::abs(full.determinant() / std::pow(full(2, 2), 3)) <= 1e-9) {
    throw DegenerateConfiguration("fitted homography is singular");
  }
  return Homography::from_matrix(from_eigen(full));
}

double corner_transfer_error(const Homography& a, const Homography& b) {
  double worst = 0;
  for (Point2 c : {Point2{-1, -1}, Point2{1, -1}, Point2{-1, 1}, Point2{1, 1}}) {
    const auto pa = apply_homography(a, c);
    const auto pb = apply_homography(b, c);
    if (!pa.valid || !pb.valid) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::hypot(pa.point.x - pb.point.x, pa.point.y - pb.point.y));
  }
  return worst;
}

}  // namespace wscf::geometry
