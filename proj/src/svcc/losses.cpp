#include "wscf/svcc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wscf::svcc {

template <typename T>
Var<T> count_region(const Var<T>& density, const CropRegion& crop) {
  Var<T> d = density;
  const Shape s = d.shape();
  if (s.size() == 4 && s[0] == 1 && s[1] == 1) d = reshape(d, {s[2], s[3]});
  if (d.shape().size() != 2) throw ShapeError("count_region: expected a 2-D map, got " + to_string(s));
  if (crop.x0 < 0 || crop.y0 < 0 || crop.x1 > d.shape()[1] || crop.y1 > d.shape()[0] || crop.x0 >= crop.x1 ||
      crop.y0 >= crop.y1) {
    throw std::invalid_argument("count_region: crop outside the map or empty");
  }
  return sum_region(d, crop.y0, crop.y1, crop.x0, crop.x1);
}

std::vector<CropRegion> sample_nested_crops(int h, int w, int n, Rng& rng, CropSampler sampler) {
  if (n < 2) throw std::invalid_argument("sample_nested_crops: need at least 2 levels");
  if (h < 8 || w < 8) throw std::invalid_argument("sample_nested_crops: map must be at least 8x8");
  if (!(0 < sampler.min_fraction && sampler.min_fraction <= sampler.max_fraction && sampler.max_fraction < 1)) {
    throw std::invalid_argument("sample_nested_crops: fractions must satisfy 0 < min <= max < 1");
  }
  // smallest side the chain can reach must still hold one cell below it
  double min_side = std::min(h, w);
  for (int k = 0; k < n - 1; ++k) min_side = std::ceil(min_side * sampler.min_fraction);
  if (min_side < 2 && n > 1) {
    throw std::invalid_argument("sample_nested_crops: map too small for " + std::to_string(n) + " nesting levels");
  }

  std::uniform_real_distribution<double> frac(sampler.min_fraction, sampler.max_fraction);
  auto side = [&](int parent, bool top_level) {
    const int floor_side = static_cast<int>(std::ceil(parent * sampler.min_fraction));
    int s = static_cast<int>(std::lround(frac(rng) * parent));
    s = std::max(s, floor_side);
    return std::clamp(s, 1, top_level ? parent : parent - 1);
  };
  std::vector<CropRegion> crops;
  CropRegion parent{0, 0, w, h};
  for (int k = 0; k < n; ++k) {
    const int pw = parent.x1 - parent.x0, ph = parent.y1 - parent.y0;
    const int cw = side(pw, k == 0), ch = side(ph, k == 0);
    std::uniform_int_distribution<int> ox(0, pw - cw), oy(0, ph - ch);
    CropRegion c;
    c.x0 = parent.x0 + ox(rng);
    c.y0 = parent.y0 + oy(rng);
    c.x1 = c.x0 + cw;
    c.y1 = c.y0 + ch;
    crops.push_back(c);
    parent = c;
  }
  return crops;
}

template <typename T>
NestedCounts<T> nested_counts(const Var<T>& density, const std::vector<CropRegion>& crops) {
  NestedCounts<T> out;
  out.crops = crops;
  for (const auto& c : crops) out.counts.push_back(count_region(density, c));
  return out;
}

template <typename T>
Var<T> ranking_hinge(const std::vector<NestedCounts<T>>& chains) {
  Var<T> total = scalar<T>(0);
  for (const auto& chain : chains) {
    if (chain.crops.size() != chain.counts.size()) {
      throw std::invalid_argument("loss_weak: crops and counts differ in length");
    }
    for (std::size_t j = 0; j + 1 < chain.crops.size(); ++j) {
      if (!chain.crops[j].contains(chain.crops[j + 1]) || chain.crops[j].area() <= chain.crops[j + 1].area()) {
        throw std::invalid_argument("loss_weak: region chain is not ordered by strict containment");
      }
    }
    for (std::size_t j = 0; j < chain.counts.size(); ++j)
      for (std::size_t k = j + 1; k < chain.counts.size(); ++k)
        total = add(total, relu(sub(chain.counts[k], chain.counts[j])));
  }
  return total;
}

template <typename T>
Var<T> loss_weak(const std::vector<Var<T>>& counts, const std::vector<double>& gt_counts,
                 const std::vector<NestedCounts<T>>& chains, double ranking_weight) {
  if (counts.size() != gt_counts.size()) throw std::invalid_argument("loss_weak: counts and GT differ in length");
  Var<T> total = scalar<T>(0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    total = add(total, square(add_scalar(counts[i], static_cast<T>(-gt_counts[i]))));
  }
  return add(total, scale(ranking_hinge(chains), static_cast<T>(ranking_weight)));
}

template <typename T>
Var<T> loss_full(const Var<T>& density, const Var<T>& gt_density) {
  if (density.shape() != gt_density.shape()) {
    throw ShapeError("loss_full: " + to_string(density.shape()) + " vs " + to_string(gt_density.shape()));
  }
  return sum(square(sub(density, gt_density)));
}

#define WSCF_INSTANTIATE(T)                                                                           \
  template Var<T> count_region(const Var<T>&, const CropRegion&);                                    \
  template NestedCounts<T> nested_counts(const Var<T>&, const std::vector<CropRegion>&);             \
  template Var<T> ranking_hinge(const std::vector<NestedCounts<T>>&);                                \
  template Var<T> loss_weak(const std::vector<Var<T>>&, const std::vector<double>&,                  \
                            const std::vector<NestedCounts<T>>&, double);                             \
  template Var<T> loss_full(const Var<T>&, const Var<T>&);
WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)
#undef WSCF_INSTANTIATE

}  // namespace wscf::svcc
