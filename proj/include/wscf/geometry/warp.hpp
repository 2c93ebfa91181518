#pragma once

#include <vector>

#include "wscf/geometry/homography.hpp"
#include "wscf/substrate/autograd.hpp"

namespace wscf::geometry {

/// Feature maps are a quarter of the image resolution.
inline constexpr int kFeatureStride = 4;

/// Projection layer: each output cell samples `features` bilinearly at H applied
/// to its normalized center. Accepts [h, w], [C, h, w] or [N, C, h, w] (one H
/// for every batch item). Out-of-range samples read as zero. Differentiable in
/// the features.
template <typename T>
Var<T> warp_features(const Var<T>& features, const Homography& h, int stride = kFeatureStride);

/// [N, C, h, w] with one homography per batch item.
template <typename T>
Var<T> warp_features(const Var<T>& batch, const std::vector<Homography>& hs,
                     int stride = kFeatureStride);

/// Normalized coordinate of a feature cell center on the image it was computed from.
Point2 cell_center(int x, int y, int w, int h, int stride = kFeatureStride);

}  // namespace wscf::geometry
