#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wscf/substrate/tensor.hpp"

namespace wscf {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on demand, same shape as value
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<T>& ensure_grad() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a value in the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Tensor<T>& grad() const { return node_->grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  const std::string& op() const { return node_->op; }
  void zero_grad() { node_->grad = Tensor<T>(); }
  T item() const;

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> leaf(Tensor<T> value, bool requires_grad = false);

template <typename T>
Var<T> constant(Tensor<T> value) {
  return leaf(std::move(value), false);
}

template <typename T>
Var<T> scalar(T v) {
  return leaf(Tensor<T>({1}, v), false);
}

/// Records an operation. The backward closure reads the node's grad and
/// accumulates into the grads of inputs that require them. Output values are
/// checked for NaN/Inf and the op is named in the error.
template <typename T>
Var<T> record(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
              std::function<void(Node<T>&)> backward);

/// Reverse-mode sweep from a scalar. Leaves accumulate into existing grads.
template <typename T>
void backward(const Var<T>& loss);

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Adds `g` into the grad slot of `input` when it takes part in differentiation.
template <typename T>
inline Tensor<T>* grad_slot(Node<T>& input) {
  return input.requires_grad ? &input.ensure_grad() : nullptr;
}

}  // namespace wscf
