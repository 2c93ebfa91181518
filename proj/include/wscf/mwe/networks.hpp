#pragma once

#include <vector>

#include "wscf/geometry/homography.hpp"
#include "wscf/mwe/pairs.hpp"
#include "wscf/svcc/counting_net.hpp"

namespace wscf::mwe {

struct MweConfig {
  svcc::CountingNetConfig homography_extractor;  // widths of the F^h extractor
  int pooled_size = 8;                           // reference grid of the correlation volume
  int homography_channels = 16;
  int match_channels = 16;
  int confidence_channels = 16;
  int distance_channels = 8;
  double distance_scale = 1.0 / 50.0;  // metres -> network input
  bool use_distance = true;
};

/// Cosine similarity of every cell of F_i against F_j average-pooled to
/// pooled x pooled: [N, C, h, w] x [N, C, h, w] -> [N, pooled^2, h, w].
template <typename T>
Var<T> correlation_map(const Var<T>& fi, const Var<T>& fj, int pooled = 8);

/// F^h extractor, global correlation and a regression head for the eight free entries.
template <typename T>
class HomographyNet {
 public:
  HomographyNet(const MweConfig& config, Rng& rng);

  Var<T> extract_features(const Var<T>& images) const { return extractor_(images); }
  /// [P, 8] free entries for each (features[i], features[j]) pair.
  Var<T> predict(const Var<T>& features, const std::vector<ViewPair>& pairs) const;
  Var<T> predict_from_correlation(const Var<T>& correlation) const;

  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

 private:
  int pooled_;
  ParameterSet<T> params_;
  svcc::FeatureExtractor<T> extractor_;
  std::vector<Conv2d<T>> convs_;
  Linear<T> head_;
};

/// Rows of a [P, 8] prediction as homographies.
std::vector<geometry::Homography> to_homographies(const Tensor<float>& free_entries);
std::vector<geometry::Homography> to_homographies(const Tensor<double>& free_entries);

/// M_ij from concat(F_i^c, P(F_j^c, H_ij)).
template <typename T>
class MatchNet {
 public:
  MatchNet(int feature_channels, const MweConfig& config, Rng& rng);

  /// counting_features [V, C, h, w]; one homography per pair. Returns [P, 1, h, w] in [0, 1].
  Var<T> operator()(const Var<T>& counting_features, const std::vector<ViewPair>& pairs,
                    const std::vector<geometry::Homography>& homographies) const;

  ParameterSet<T>& parameters() { return params_; }

 private:
  ParameterSet<T> params_;
  std::vector<Conv2d<T>> convs_;
};

/// T_i from the distance map: two stride-2 convolutions.
template <typename T>
class DistanceEncoder {
 public:
  DistanceEncoder(const MweConfig& config, Rng& rng);
  /// distance [V, 1, H, W] in metres -> [V, C_t, H/4, W/4]
  Var<T> operator()(const Var<T>& distance) const;
  ParameterSet<T>& parameters() { return params_; }

 private:
  double scale_;
  ParameterSet<T> params_;
  std::vector<Conv2d<T>> convs_;
};

inline constexpr double kConfidenceFloor = 1e-6;

/// C_i = eps + (1 - eps) * sigmoid(net(concat(F_i^h, T_i))), in (eps, 1].
template <typename T>
class ConfidenceNet {
 public:
  ConfidenceNet(int feature_channels, const MweConfig& config, Rng& rng);
  /// distance_features may be empty when the net was built without distance input.
  Var<T> operator()(const Var<T>& homography_features, const Var<T>* distance_features) const;
  ParameterSet<T>& parameters() { return params_; }
  bool uses_distance() const { return uses_distance_; }

 private:
  bool uses_distance_;
  ParameterSet<T> params_;
  std::vector<Conv2d<T>> convs_;
};

}  // namespace wscf::mwe
