#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace wscf::scenesim {

using Vec3 = std::array<double, 3>;

/// Pinhole camera. Simulator-internal: nothing downstream of the dataset
/// writer ever sees one.
struct CameraSpec {
  Vec3 position{0, 0, 6};
  double yaw = 0;    // heading in the ground plane, radians from +x
  double pitch = 0;  // downward tilt, radians
  double focal = 55;
  int width = 64;
  int height = 64;

  Vec3 forward() const;
  Vec3 right() const;
  Vec3 down() const;
  double cx() const { return 0.5 * (width - 1); }
  double cy() const { return 0.5 * (height - 1); }
};

struct Projection {
  double x = 0;
  double y = 0;
  double depth = 0;  // along the optical axis
};

/// nullopt when the point is behind (or too close to) the camera.
std::optional<Projection> project(const CameraSpec& cam, const Vec3& world);

/// Unnormalized ray direction through pixel (x, y).
Vec3 pixel_ray(const CameraSpec& cam, double x, double y);

/// Camera placement recipes:
///   "arc"      cameras on a circle around the scene centre, 50 degrees apart
///              (the first V of a fixed sequence, so smaller V is a subset)
///   "disjoint" two cameras back to back at the centre looking outwards
std::vector<CameraSpec> make_layout(const std::string& name, int views, int width, int height,
                                    double fov_degrees);

}  // namespace wscf::scenesim
