#include "wscf/scenesim/camera.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace wscf::scenesim {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

constexpr double kDeg = std::numbers::pi / 180.0;

CameraSpec looking_at(Vec3 position, Vec3 target, double focal, int width, int height) {
  CameraSpec c;
  c.position = position;
  const double dx = target[0] - position[0];
  const double dy = target[1] - position[1];
  const double dz = target[2] - position[2];
  c.yaw = std::atan2(dy, dx);
  c.pitch = std::atan2(-dz, std::hypot(dx, dy));
  c.focal = focal;
  c.width = width;
  c.height = height;
  return c;
}

}  // namespace

Vec3 CameraSpec::forward() const {
  return {std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), -std::sin(pitch)};
}

Vec3 CameraSpec::right() const {
  const Vec3 f = forward();
  const double n = std::hypot(f[0], f[1]);
  return {f[1] / n, -f[0] / n, 0.0};
}

Vec3 CameraSpec::down() const { return cross(forward(), right()); }

std::optional<Projection> project(const CameraSpec& cam, const Vec3& world) {
  const Vec3 v{world[0] - cam.position[0], world[1] - cam.position[1], world[2] - cam.position[2]};
  const double z = dot(v, cam.forward());
  if (z < 0.1) return std::nullopt;
  return Projection{cam.cx() + cam.focal * dot(v, cam.right()) / z,
                    cam.cy() + cam.focal * dot(v, cam.down()) / z, z};
}

Vec3 pixel_ray(const CameraSpec& cam, double x, double y) {
  const Vec3 f = cam.forward(), r = cam.right(), d = cam.down();
  const double a = (x - cam.cx()) / cam.focal;
  const double b = (y - cam.cy()) / cam.focal;
  return {f[0] + a * r[0] + b * d[0], f[1] + a * r[1] + b * d[1], f[2] + a * r[2] + b * d[2]};
}

std::vector<CameraSpec> make_layout(const std::string& name, int views, int width, int height,
                                    double fov_degrees) {
  if (views < 1) throw std::invalid_argument("layout needs at least one view");
  const double focal = 0.5 * width / std::tan(0.5 * fov_degrees * kDeg);
  std::vector<CameraSpec> cams;
  if (name == "arc") {
    static constexpr double kAngles[] = {-50, 0, 50, 100, -100, 150};
    if (views > 6) throw std::invalid_argument("arc layout supports at most 6 views");
    constexpr double radius = 13.0, height_m = 6.0;
    for (int k = 0; k < views; ++k) {
      const double a = (180.0 + kAngles[k]) * kDeg;
      cams.push_back(looking_at({radius * std::cos(a), radius * std::sin(a), height_m}, {0, 0, 0},
                                focal, width, height));
    }
  } else if (name == "disjoint") {
    if (views != 2) throw std::invalid_argument("disjoint layout has exactly 2 views");
    cams.push_back(looking_at({-1, 0, 6}, {-12, 0, 0}, focal, width, height));
    cams.push_back(looking_at({1, 0, 6}, {12, 0, 0}, focal, width, height));
  } else {
    throw std::invalid_argument("unknown camera layout '" + name + "' (expected arc or disjoint)");
  }
  return cams;
}

}  // namespace wscf::scenesim
