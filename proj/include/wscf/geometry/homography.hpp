#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "wscf/substrate/kernels.hpp"

namespace wscf::geometry {

struct Point2 {
  double x = 0;
  double y = 0;
};

/// 3x3 projective map between normalized [-1, 1] image frames, stored
/// row-major with the bottom-right entry fixed at 1.
class Homography {
 public:
  Homography() : m_(identity().m_) {}

  static Homography identity();
  /// Rescales so m[8] == 1; throws if m[8] is (numerically) zero.
  static Homography from_matrix(const kernels::Mat3& m);
  /// The eight entries other than the bottom-right one, row-major.
  static Homography from_free_entries(std::span<const double, 8> v);

  const kernels::Mat3& matrix() const { return m_; }
  double operator()(int row, int col) const { return m_[row * 3 + col]; }
  std::array<double, 8> free_entries() const;
  double determinant() const;
  Homography inverse() const;
  /// (this * other): apply other first.
  Homography compose(const Homography& other) const;

 private:
  explicit Homography(const kernels::Mat3& m) : m_(m) {}
  kernels::Mat3 m_;
};

struct ProjectedPoint {
  Point2 point;
  bool valid = false;  // false when the third homogeneous coordinate vanishes
};

ProjectedPoint apply_homography(const Homography& h, Point2 p);
std::vector<ProjectedPoint> apply_homography(const Homography& h, std::span<const Point2> points);

/// Pixel -> normalized: x' = 2x/(width-1) - 1, likewise for y.
Point2 normalize_coords(Point2 pixel, int width, int height);
Point2 denormalize_coords(Point2 normalized, int width, int height);

/// Sentinel for view pairs with no common ground: sends every point to (-10, -10).
Homography make_dummy();
bool is_dummy(const Homography& h);

struct Correspondence {
  Point2 in_i;  // source frame
  Point2 in_j;  // target frame
  int person_id = -1;
};

class InsufficientCorrespondences : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DegenerateConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares DLT (Hartley-normalized, SVD of the 2N x 9 system) of the map
/// taking `in_i` to `in_j`. Needs >= 4 pairs with unique person ids and
/// coordinates inside [-1.5, 1.5].
Homography fit_homography_dlt(std::span<const Correspondence> pairs);

/// Largest difference of the four corners of [-1, 1]^2 mapped by `a` and `b`.
double corner_transfer_error(const Homography& a, const Homography& b);

}  // namespace wscf::geometry
