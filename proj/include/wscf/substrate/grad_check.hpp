#pragma once

#include <functional>
#include <vector>

#include "wscf/substrate/autograd.hpp"

namespace wscf {

struct GradCheckReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  std::vector<double> relative_error;
  double max_relative_error = 0;
  double mean_relative_error = 0;
};

using ScalarFunction = std::function<Var<double>(const Var<double>&)>;

/// Central differences (f(x+eps) - f(x-eps)) / (2 eps) per element of x,
/// compared against the reverse-mode gradient. Relative error is
/// |a - n| / max(|a|, |n|, floor) so entries that are zero on both sides do
/// not divide by zero. Throws if eps is outside [1e-7, 1e-2] or if two
/// evaluations at x disagree.
GradCheckReport grad_check(const ScalarFunction& f, const Tensor<double>& x, double eps = 1e-6,
                           double floor = 1e-3);

/// The same check against a leaf that `f` closes over, such as a network
/// weight. The leaf's value is restored and its gradient cleared afterwards.
GradCheckReport grad_check_parameter(const std::function<Var<double>()>& f, Var<double> param,
                                     double eps = 1e-6, double floor = 1e-3);

}  // namespace wscf
