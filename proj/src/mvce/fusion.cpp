#include "wscf/mvce/fusion.hpp"

#include <stdexcept>

#include "wscf/substrate/ops.hpp"

namespace wscf::mvce {

template <typename T>
Var<T> scene_count(const Var<T>& weights, const Var<T>& densities) {
  if (weights.shape() != densities.shape()) {
    throw ShapeError("scene_count: weights " + to_string(weights.shape()) + " vs densities " +
                     to_string(densities.shape()));
  }
  return sum(mul(weights, densities));
}

template <typename T>
Var<T> loss_scene(const Var<T>& s, double s_gt) {
  if (s_gt < 0) throw std::invalid_argument("loss_scene: negative ground-truth count");
  return square(add_scalar(s, static_cast<T>(-s_gt)));
}

template <typename T>
Var<T> total_loss(const Var<T>& l_s, const Var<T>& l_di, const Var<T>& l_d, const Var<T>& l_h,
                  const LossWeights& w) {
  if (w.lambda < 0 || w.beta < 0 || w.gamma < 0) throw std::invalid_argument("total_loss: negative loss weight");
  Var<T> out = add(l_s, scale(l_di, static_cast<T>(w.lambda)));
  out = add(out, scale(l_d, static_cast<T>(w.beta)));
  return add(out, scale(l_h, static_cast<T>(w.gamma)));
}

#define WSCF_INSTANTIATE(T)                                             \
  template Var<T> scene_count(const Var<T>&, const Var<T>&);           \
  template Var<T> loss_scene(const Var<T>&, double);                   \
  template Var<T> total_loss(const Var<T>&, const Var<T>&, const Var<T>&, const Var<T>&, const LossWeights&);
WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)
#undef WSCF_INSTANTIATE

}  // namespace wscf::mvce
