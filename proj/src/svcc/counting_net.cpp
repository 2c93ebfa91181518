#include "wscf/svcc/counting_net.hpp"

#include <stdexcept>

namespace wscf::svcc {

void check_divisible(const Shape& s) {
  if (s.size() != 4 || s[1] != 1) throw ShapeError("expected [N, 1, H, W] images, got " + to_string(s));
  if (s[2] % 4 || s[3] % 4) {
    throw ShapeError("image size " + std::to_string(s[2]) + "x" + std::to_string(s[3]) +
                     " is not divisible by 4; pad the image to a multiple of 4");
  }
}

template <typename T>
FeatureExtractor<T>::FeatureExtractor(ParameterSet<T>& params, const std::string& prefix,
                                      const CountingNetConfig& c, Rng& rng)
    : input_scale(c.input_scale) {
  const int c1 = c.stage1_channels, c2 = c.stage2_channels, cf = c.feature_channels;
  const int ins[] = {1, c1, c1, c2, c2, cf, cf};
  const int outs[] = {c1, c1, c2, c2, cf, cf, cf};
  const int strides[] = {1, 2, 1, 2, 1, 1, 1};
  for (int k = 0; k < 7; ++k) {
    layers.push_back(make_conv<T>(params, prefix + "conv" + std::to_string(k + 1), ins[k], outs[k], 3,
                                  {strides[k], 1, 1}, rng));
  }
}

template <typename T>
Var<T> FeatureExtractor<T>::operator()(const Var<T>& images) const {
  check_divisible(images.shape());
  Var<T> x = scale(images, static_cast<T>(input_scale));
  for (const auto& layer : layers) x = relu(layer(x));
  return x;
}

template <typename T>
DensityDecoder<T>::DensityDecoder(ParameterSet<T>& params, const std::string& prefix, int in_channels,
                                  const CountingNetConfig& c, Rng& rng) {
  const int cd = c.decoder_channels;
  const int ins[] = {in_channels, cd, cd, cd / 2};
  const int outs[] = {cd, cd, cd / 2, 1};
  for (int k = 0; k < 4; ++k) {
    layers.push_back(make_conv<T>(params, prefix + "dconv" + std::to_string(k + 1), ins[k], outs[k], 3,
                                  {1, 2, 2}, rng));
  }
  layers.back().bias.mutable_value().fill(static_cast<T>(c.output_bias));
  // start the output layer small so the initial map is near-uniform
  for (auto& v : layers.back().weight.mutable_value().values()) v *= static_cast<T>(0.1);
}

template <typename T>
Var<T> DensityDecoder<T>::operator()(const Var<T>& features) const {
  Var<T> x = features;
  for (std::size_t k = 0; k + 1 < layers.size(); ++k) x = relu(layers[k](x));
  return softplus(layers.back()(x));
}

template <typename T>
CountingNet<T>::CountingNet(const CountingNetConfig& config, Rng& rng) : config_(config) {
  ParameterSet<T> ext;
  extractor_ = FeatureExtractor<T>(ext, "extractor.", config, rng);
  decoder_ = DensityDecoder<T>(decoder_params_, "decoder.", extractor_.channels(), config, rng);
  params_.append(ext, "");
  params_.append(decoder_params_, "");
}

template <typename T>
Var<T> CountingNet<T>::extract_features(const Var<T>& images) const {
  return extractor_(images);
}

template <typename T>
Var<T> CountingNet<T>::predict_density(const Var<T>& features) const {
  if (features.shape().size() != 4 || features.shape()[1] != extractor_.channels()) {
    throw ShapeError("predict_density: expected counting features, got " + to_string(features.shape()));
  }
  return decoder_(features);
}

template <typename T>
Var<T> image_batch(const std::vector<const Tensor<float>*>& images, double s) {
  if (images.empty()) throw ShapeError("image_batch: no images");
  const int h = images[0]->dim(0), w = images[0]->dim(1);
  Tensor<T> out({static_cast<int>(images.size()), 1, h, w});
  std::size_t k = 0;
  for (const auto* im : images) {
    if (im->shape() != Shape{h, w}) throw ShapeError("image_batch: mixed image sizes");
    for (float v : im->values()) out[k++] = static_cast<T>(v * s);
  }
  return constant(std::move(out));
}

template struct FeatureExtractor<float>;
template struct FeatureExtractor<double>;
template struct DensityDecoder<float>;
template struct DensityDecoder<double>;
template class CountingNet<float>;
template class CountingNet<double>;
template Var<float> image_batch(const std::vector<const Tensor<float>*>&, double);
template Var<double> image_batch(const std::vector<const Tensor<float>*>&, double);

}  // namespace wscf::svcc
