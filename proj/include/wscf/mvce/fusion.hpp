#pragma once

#include "wscf/substrate/autograd.hpp"

namespace wscf::mvce {

struct LossWeights {
  double lambda = 1.0;  // single-view counting
  double beta = 1.0;    // match maps
  double gamma = 1.0;   // homographies
};

/// S = sum_i sum(W_i * D_i); weights and densities are [V, 1, h, w].
template <typename T>
Var<T> scene_count(const Var<T>& weights, const Var<T>& densities);

/// (S - S_gt)^2
template <typename T>
Var<T> loss_scene(const Var<T>& s, double s_gt);

/// l_s + lambda * l_di + beta * l_d + gamma * l_h
template <typename T>
Var<T> total_loss(const Var<T>& l_s, const Var<T>& l_di, const Var<T>& l_d, const Var<T>& l_h,
                  const LossWeights& weights);

}  // namespace wscf::mvce
