#pragma once

#include <vector>

#include "wscf/geometry/homography.hpp"
#include "wscf/mwe/pairs.hpp"
#include "wscf/substrate/autograd.hpp"

namespace wscf::mwe {

/// W_i = C_i / (C_i + sum_{j != i} P(C_j, H_ij) * M_ij) for every view.
/// confidence [V, 1, h, w]; match [P, 1, h, w] and homographies follow `pairs`
/// (pairs absent from the list contribute nothing). Returns [V, 1, h, w].
template <typename T>
Var<T> compute_weights(const Var<T>& confidence, const Var<T>& match, const std::vector<ViewPair>& pairs,
                       const std::vector<geometry::Homography>& homographies);

/// sum over pairs of the squared distance between the eight free entries.
/// Both pair lists must name the same set of ordered pairs.
template <typename T>
Var<T> loss_homography(const Var<T>& predicted, const std::vector<ViewPair>& predicted_pairs,
                       const std::vector<geometry::Homography>& gt, const std::vector<ViewPair>& gt_pairs);

/// sum ||M * M^gt - M^gt||^2; cells where M^gt = 0 are unconstrained.
/// Throws unless M^gt is binary.
template <typename T>
Var<T> loss_match(const Var<T>& match, const Tensor<T>& gt);

}  // namespace wscf::mwe
