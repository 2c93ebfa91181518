#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wscf/substrate/layers.hpp"

namespace wscf {

template <typename T>
struct OptimizerState {
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update. Accumulators are created on the first call.
/// Throws ShapeError when params, grads and accumulators disagree.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads,
               OptimizerState<T>& state);

/// Updates every parameter of the set, treating a missing
/// grad as zero.
template <typename T>
void adam_step(ParameterSet<T>& params, OptimizerState<T>& state);

}  // namespace wscf
