#include "wscf/substrate/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wscf {

namespace {

double evaluate(const ScalarFunction& f, const Tensor<double>& x) {
  NoGradGuard guard;
  Var<double> out = f(constant(x));
  if (out.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
  return out.item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, const Tensor<double>& x, double eps,
                           double floor) {
  if (eps < 1e-7 || eps > 1e-2) throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-2]");

  const double base = evaluate(f, x);
  if (evaluate(f, x) != base) throw std::runtime_error("grad_check: function is not deterministic");

  Var<double> input = leaf(x, true);
  Var<double> out = f(input);
  backward(out);

  GradCheckReport report;
  report.analytic.assign(x.size(), 0.0);
  if (input.has_grad()) {
    for (std::size_t i = 0; i < x.size(); ++i) report.analytic[i] = input.grad()[i];
  }

  Tensor<double> probe = x;
  report.numeric.resize(x.size());
  report.relative_error.resize(x.size());
  double total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = evaluate(f, probe);
    probe[i] = orig - eps;
    const double down = evaluate(f, probe);
    probe[i] = orig;
    const double n = (up - down) / (2 * eps);
    const double a = report.analytic[i];
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    report.numeric[i] = n;
    report.relative_error[i] = rel;
    report.max_relative_error = std::max(report.max_relative_error, rel);
    total += rel;
  }
  report.mean_relative_error = x.size() ? total / x.size() : 0.0;
  return report;
}

GradCheckReport grad_check_parameter(const std::function<Var<double>()>& f, Var<double> param,
                                     double eps, double floor) {
  if (eps < 1e-7 || eps > 1e-2) throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-2]");
  if (!param.requires_grad()) throw std::invalid_argument("grad_check: parameter does not require grad");
  auto eval = [&] {
    NoGradGuard guard;
    Var<double> out = f();
    if (out.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
    return out.item();
  };
  const double base = eval();
  if (eval() != base) throw std::runtime_error("grad_check: function is not deterministic");

  param.zero_grad();
  backward(f());
  GradCheckReport report;
  const std::size_t n = param.value().size();
  report.analytic.assign(n, 0.0);
  if (param.has_grad())
    for (std::size_t i = 0; i < n; ++i) report.analytic[i] = param.grad()[i];
  param.zero_grad();

  Tensor<double>& value = param.mutable_value();
  report.numeric.resize(n);
  report.relative_error.resize(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double orig = value[i];
    value[i] = orig + eps;
    const double up = eval();
    value[i] = orig - eps;
    const double down = eval();
    value[i] = orig;
    const double num = (up - down) / (2 * eps);
    const double a = report.analytic[i];
    const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), floor});
    report.numeric[i] = num;
    report.relative_error[i] = rel;
    report.max_relative_error = std::max(report.max_relative_error, rel);
    total += rel;
  }
  report.mean_relative_error = n ? total / n : 0.0;
  return report;
}

}  // namespace wscf
