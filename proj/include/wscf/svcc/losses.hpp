#pragma once

#include <vector>

#include "wscf/substrate/layers.hpp"

namespace wscf::svcc {

/// Half-open cell rectangle [x0, x1) x [y0, y1).
struct CropRegion {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(const CropRegion& o) const { return x0 <= o.x0 && y0 <= o.y0 && o.x1 <= x1 && o.y1 <= y1; }
  friend bool operator==(const CropRegion&, const CropRegion&) = default;
};

struct CropSampler {
  double min_fraction = 0.5;  // side length relative to the parent
  double max_fraction = 0.9;
};

/// Sum of a [h, w] (or [1, 1, h, w]) density over the crop.
template <typename T>
Var<T> count_region(const Var<T>& density, const CropRegion& crop);

/// A_1 ⊇ A_2 ⊇ ... ⊇ A_n, each strictly inside its predecessor.
std::vector<CropRegion> sample_nested_crops(int h, int w, int n, Rng& rng, CropSampler sampler = {});

/// Region counts along one nesting chain, largest region first.
template <typename T>
struct NestedCounts {
  std::vector<CropRegion> crops;
  std::vector<Var<T>> counts;
};

template <typename T>
NestedCounts<T> nested_counts(const Var<T>& density, const std::vector<CropRegion>& crops);

/// sum_i (c_i - c_i^gt)^2 + ranking_weight * sum_i sum_{j<k} max(C(A_ik) - C(A_ij), 0).
/// Throws if a chain is not ordered by containment.
template <typename T>
Var<T> loss_weak(const std::vector<Var<T>>& counts, const std::vector<double>& gt_counts,
                 const std::vector<NestedCounts<T>>& chains, double ranking_weight = 10.0);

/// Hinge part alone (the ranking term before weighting).
template <typename T>
Var<T> ranking_hinge(const std::vector<NestedCounts<T>>& chains);

/// Sum of squared per-cell differences.
template <typename T>
Var<T> loss_full(const Var<T>& density, const Var<T>& gt_density);

}  // namespace wscf::svcc
