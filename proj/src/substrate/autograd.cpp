#include "wscf/substrate/autograd.hpp"

#include <unordered_set>

namespace wscf {

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

template <typename T>
T Var<T>::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item() on non-scalar of shape " + to_string(node_->value.shape()));
  }
  return node_->value[0];
}

template <typename T>
Var<T> leaf(Tensor<T> value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("non-finite value in leaf tensor");
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var<T>(std::move(node));
}

template <typename T>
Var<T> record(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
              std::function<void(Node<T>&)> backward) {
  if (!value.all_finite()) throw NumericError("non-finite output from op '" + op + "'");
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(backward);
  }
  return Var<T>(std::move(node));
}

template <typename T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // iterative post-order DFS gives a topological order
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad().fill(T{1});
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>& node = **it;
    if (!node.backward) continue;
    node.ensure_grad();
    node.backward(node);
    for (const auto& in : node.inputs) {
      if (in->requires_grad && !in->grad.empty() && !in->grad.all_finite()) {
        throw NumericError("non-finite gradient produced by op '" + node.op + "'");
      }
    }
    // intermediate grads are not needed once propagated
    if (!node.inputs.empty()) node.grad = Tensor<T>();
  }
}

#define WSCF_INSTANTIATE(T)                                                              \
  template class Var<T>;                                                                 \
  template Var<T> leaf<T>(Tensor<T>, bool);                                              \
  template Var<T> record<T>(std::string, Tensor<T>, std::vector<Var<T>>,                 \
                            std::function<void(Node<T>&)>);                              \
  template void backward<T>(const Var<T>&);

WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)

#undef WSCF_INSTANTIATE

}  // namespace wscf
