#include "wscf/geometry/warp.hpp"

#include "wscf/substrate/ops.hpp"

namespace wscf::geometry {

template <typename T>
Var<T> warp_features(const Var<T>& batch, const std::vector<Homography>& hs, int stride) {
  if (batch.shape().size() != 4 || static_cast<int>(hs.size()) != batch.shape()[0]) {
    throw ShapeError("warp_features: expected [N, C, h, w] with N homographies, got " +
                     to_string(batch.shape()));
  }
  std::vector<kernels::Mat3> mats;
  mats.reserve(hs.size());
  for (const auto& h : hs) mats.push_back(h.matrix());
  return homography_warp(batch, mats, stride);
}

template <typename T>
Var<T> warp_features(const Var<T>& features, const Homography& h, int stride) {
  const Shape s = features.shape();
  switch (s.size()) {
    case 2:
      return reshape(warp_features(reshape(features, {1, 1, s[0], s[1]}),
                                   std::vector<Homography>{h}, stride),
                     s);
    case 3:
      return reshape(warp_features(reshape(features, {1, s[0], s[1], s[2]}),
                                   std::vector<Homography>{h}, stride),
                     s);
    case 4:
      return warp_features(features, std::vector<Homography>(s[0], h), stride);
    default:
      throw ShapeError("warp_features: unsupported rank " + to_string(s));
  }
}

Point2 cell_center(int x, int y, int w, int h, int stride) {
  return {kernels::cell_to_normalized(x, w, stride), kernels::cell_to_normalized(y, h, stride)};
}

template Var<float> warp_features(const Var<float>&, const Homography&, int);
template Var<double> warp_features(const Var<double>&, const Homography&, int);
template Var<float> warp_features(const Var<float>&, const std::vector<Homography>&, int);
template Var<double> warp_features(const Var<double>&, const std::vector<Homography>&, int);

}  // namespace wscf::geometry
