#include "wscf/substrate/adam.hpp"

#include <cmath>

namespace wscf {

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads,
               OptimizerState<T>& state) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
  if (!(state.learning_rate > 0)) throw std::invalid_argument("adam_step: learning rate must be > 0");
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state tracks a different parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() ||
        params[i]->shape() != state.first_moment[i].shape()) {
      throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }

  ++state.step_count;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto& g = *grads[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      m[k] = static_cast<T>(b1 * m[k] + (1 - b1) * gk);
      v[k] = static_cast<T>(b2 * v[k] + (1 - b2) * gk * gk);
      const double mhat = m[k] / c1, vhat = v[k] / c2;
      p[k] = static_cast<T>(p[k] - state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

template <typename T>
void adam_step(ParameterSet<T>& params, OptimizerState<T>& state) {
  std::vector<Tensor<T>*> ps;
  std::vector<const Tensor<T>*> gs;
  std::vector<Tensor<T>> zeros;
  zeros.reserve(params.size());
  for (const auto& item : params.items()) {
    Var<T> v = item.second;
    ps.push_back(&v.mutable_value());
    if (v.has_grad()) {
      gs.push_back(&v.grad());
    } else {
      zeros.emplace_back(v.shape());
      gs.push_back(&zeros.back());
    }
  }
  adam_step<T>(std::span<Tensor<T>* const>(ps), std::span<const Tensor<T>* const>(gs), state);
}

template void adam_step<float>(std::span<Tensor<float>* const>,
                               std::span<const Tensor<float>* const>, OptimizerState<float>&);
template void adam_step<double>(std::span<Tensor<double>* const>,
                                std::span<const Tensor<double>* const>, OptimizerState<double>&);
template void adam_step<float>(ParameterSet<float>&, OptimizerState<float>&);
template void adam_step<double>(ParameterSet<double>&, OptimizerState<double>&);

}  // namespace wscf
