#pragma once

#include <memory>

#include "wscf/substrate/layers.hpp"

namespace wscf::svcc {

struct CountingNetConfig {
  int stage1_channels = 8;
  int stage2_channels = 16;
  int feature_channels = 16;  // C_f
  int decoder_channels = 16;
  double input_scale = 10.0;
  double output_bias = -6.0;  // softplus(-6) ~ 0.0025 people per cell at init

  friend bool operator==(const CountingNetConfig&, const CountingNetConfig&) = default;
};

/// Any image -> density map function. Images are [N, 1, H, W]; densities
/// [N, 1, H/4, W/4] and non-negative.
template <typename T>
class DensityPredictor {
 public:
  virtual ~DensityPredictor() = default;
  virtual Var<T> predict_density_from_images(const Var<T>& images) const = 0;
};

/// Seven 3x3 convolutions (the second and fourth with stride 2) down to a
/// quarter-resolution feature map.
template <typename T>
struct FeatureExtractor {
  std::vector<Conv2d<T>> layers;
  double input_scale = 1.0;

  FeatureExtractor() = default;
  FeatureExtractor(ParameterSet<T>& params, const std::string& prefix, const CountingNetConfig& config,
                   Rng& rng);
  Var<T> operator()(const Var<T>& images) const;
  int channels() const { return layers.back().out_channels(); }
};

/// Four dilated 3x3 convolutions and a softplus.
template <typename T>
struct DensityDecoder {
  std::vector<Conv2d<T>> layers;

  DensityDecoder() = default;
  DensityDecoder(ParameterSet<T>& params, const std::string& prefix, int in_channels,
                 const CountingNetConfig& config, Rng& rng);
  Var<T> operator()(const Var<T>& features) const;
};

template <typename T>
class CountingNet : public DensityPredictor<T> {
 public:
  CountingNet(const CountingNetConfig& config, Rng& rng);

  /// Throws if H or W is not divisible by 4.
  Var<T> extract_features(const Var<T>& images) const;
  Var<T> predict_density(const Var<T>& features) const;
  Var<T> predict_density_from_images(const Var<T>& images) const override {
    return predict_density(extract_features(images));
  }

  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }
  ParameterSet<T>& decoder_parameters() { return decoder_params_; }
  const CountingNetConfig& config() const { return config_; }

 private:
  CountingNetConfig config_;
  ParameterSet<T> params_;
  ParameterSet<T> decoder_params_;
  FeatureExtractor<T> extractor_;
  DensityDecoder<T> decoder_;
};

/// [H, W] image tensors to a [N, 1, H, W] batch.
template <typename T>
Var<T> image_batch(const std::vector<const Tensor<float>*>& images, double scale = 1.0);

void check_divisible(const Shape& images);

}  // namespace wscf::svcc
