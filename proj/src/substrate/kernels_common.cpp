#include <cmath>

#include "wscf/substrate/kernels.hpp"

namespace wscf::kernels {

double cell_to_normalized(int cell, int cells, int stride) {
  const double extent = static_cast<double>(cells) * stride;
  const double pixel = static_cast<double>(stride) * cell + 0.5 * (stride - 1);
  return 2.0 * pixel / (extent - 1.0) - 1.0;
}

double normalized_to_cell(double v, int cells, int stride) {
  const double extent = static_cast<double>(cells) * stride;
  const double pixel = (v + 1.0) * (extent - 1.0) * 0.5;
  double cell = (pixel - 0.5 * (stride - 1)) / stride;
  // snap round-off so grid centers sample exactly
  const double nearest = std::round(cell);
  if (std::abs(cell - nearest) < 1e-9) cell = nearest;
  return cell;
}

SamplePoint warp_sample_point(const Mat3& h, int x, int y, int w, int hgt, int stride) {
  const double nx = cell_to_normalized(x, w, stride);
  const double ny = cell_to_normalized(y, hgt, stride);
  const double z = h[6] * nx + h[7] * ny + h[8];
  SamplePoint s;
  if (std::abs(z) < 1e-12) return s;
  const double sx = (h[0] * nx + h[1] * ny + h[2]) / z;
  const double sy = (h[3] * nx + h[4] * ny + h[5]) / z;
  s.gx = normalized_to_cell(sx, w, stride);
  s.gy = normalized_to_cell(sy, hgt, stride);
  s.valid = std::isfinite(s.gx) && std::isfinite(s.gy);
  return s;
}

}  // namespace wscf::kernels
