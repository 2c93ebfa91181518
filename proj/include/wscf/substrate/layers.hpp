#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wscf/substrate/ops.hpp"

namespace wscf {

using Rng = std::mt19937_64;

/// Ordered, named collection of trainable leaves. Order is insertion order and
/// is what the optimizer and checkpoints key on.
template <typename T>
class ParameterSet {
 public:
  void add(std::string name, Var<T> v);
  const std::vector<std::pair<std::string, Var<T>>>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const Var<T>& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  void zero_grad();
  void set_trainable(bool on);
  void append(const ParameterSet& other, const std::string& prefix);

 private:
  std::vector<std::pair<std::string, Var<T>>> items_;
};

template <typename T>
struct Conv2d {
  Var<T> weight;
  Var<T> bias;
  ConvSpec spec;

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, weight, bias, spec); }
  int out_channels() const { return weight.shape()[0]; }
};

template <typename T>
struct Linear {
  Var<T> weight;
  Var<T> bias;

  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

/// He-normal weights, zero bias; registers "<name>.weight" and "<name>.bias".
template <typename T>
Conv2d<T> make_conv(ParameterSet<T>& params, const std::string& name, int in_channels,
                    int out_channels, int kernel, ConvSpec spec, Rng& rng);

template <typename T>
Linear<T> make_linear(ParameterSet<T>& params, const std::string& name, int in_features,
                      int out_features, Rng& rng, double gain = 2.0);

/// Copies parameter values between sets with identical names and shapes
/// (used to move a float model into double for gradient checks).
template <typename To, typename From>
void copy_parameters(const ParameterSet<From>& from, ParameterSet<To>& to);

}  // namespace wscf
