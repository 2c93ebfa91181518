#include "wscf/substrate/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace wscf {

template <typename T>
void ParameterSet<T>::add(std::string name, Var<T> v) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  items_.emplace_back(std::move(name), std::move(v));
}

template <typename T>
const Var<T>& ParameterSet<T>::get(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return v;
  throw std::out_of_range("no parameter named " + name);
}

template <typename T>
bool ParameterSet<T>::contains(const std::string& name) const {
  for (const auto& item : items_)
    if (item.first == name) return true;
  return false;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& item : items_) {
    Var<T> v = item.second;
    v.zero_grad();
  }
}

template <typename T>
void ParameterSet<T>::set_trainable(bool on) {
  for (auto& item : items_) {
    Var<T> v = item.second;
    v.set_requires_grad(on);
  }
}

template <typename T>
void ParameterSet<T>::append(const ParameterSet& other, const std::string& prefix) {
  for (const auto& [n, v] : other.items()) add(prefix + n, v);
}

template <typename T>
Conv2d<T> make_conv(ParameterSet<T>& params, const std::string& name, int in_channels,
                    int out_channels, int kernel, ConvSpec spec, Rng& rng) {
  const double stddev = std::sqrt(2.0 / (in_channels * kernel * kernel));
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor<T> w({out_channels, in_channels, kernel, kernel});
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
  Conv2d<T> conv{leaf(std::move(w), true), leaf(Tensor<T>({out_channels}), true), spec};
  params.add(name + ".weight", conv.weight);
  params.add(name + ".bias", conv.bias);
  return conv;
}

template <typename T>
Linear<T> make_linear(ParameterSet<T>& params, const std::string& name, int in_features,
                      int out_features, Rng& rng, double gain) {
  std::normal_distribution<double> dist(0.0, std::sqrt(gain / in_features));
  Tensor<T> w({out_features, in_features});
  for (auto& v : w.values()) v = static_cast<T>(dist(rng));
  Linear<T> lin{leaf(std::move(w), true), leaf(Tensor<T>({out_features}), true)};
  params.add(name + ".weight", lin.weight);
  params.add(name + ".bias", lin.bias);
  return lin;
}

template <typename To, typename From>
void copy_parameters(const ParameterSet<From>& from, ParameterSet<To>& to) {
  if (from.size() != to.size()) throw std::invalid_argument("parameter sets differ in size");
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto& [name, src] = from.items()[i];
    const auto& [dname, dst] = to.items()[i];
    if (name != dname || src.shape() != dst.shape())
      throw std::invalid_argument("parameter mismatch at " + name);
    Var<To> d = dst;
    auto& out = d.mutable_value();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<To>(src.value()[k]);
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template Conv2d<float> make_conv<float>(ParameterSet<float>&, const std::string&, int, int, int,
                                        ConvSpec, Rng&);
template Conv2d<double> make_conv<double>(ParameterSet<double>&, const std::string&, int, int,
                                          int, ConvSpec, Rng&);
template Linear<float> make_linear<float>(ParameterSet<float>&, const std::string&, int, int,
                                          Rng&, double);
template Linear<double> make_linear<double>(ParameterSet<double>&, const std::string&, int, int,
                                            Rng&, double);
template void copy_parameters<double, float>(const ParameterSet<float>&, ParameterSet<double>&);
template void copy_parameters<float, double>(const ParameterSet<double>&, ParameterSet<float>&);
template void copy_parameters<float, float>(const ParameterSet<float>&, ParameterSet<float>&);

}  // namespace wscf
