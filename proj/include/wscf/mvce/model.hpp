#pragma once

#include <cstdint>
#include <vector>

#include "wscf/mwe/networks.hpp"
#include "wscf/scenesim/supervision.hpp"
#include "wscf/svcc/counting_net.hpp"

namespace wscf::mvce {

struct ModelConfig {
  svcc::CountingNetConfig counting;
  mwe::MweConfig mwe;
};

/// Outputs of the stage-1 modules for one frame, detached from any graph.
struct FrozenInputs {
  std::vector<int> views;           // dataset view indices, in order
  Tensor<float> density;            // [V, 1, h, w]
  Tensor<float> counting_features;  // [V, C, h, w]
  Tensor<float> homography_features;
  Tensor<float> distance;  // [V, 1, H, W]
};

struct FusionOutput {
  std::vector<mwe::ViewPair> pairs;  // local indices into FrozenInputs::views
  std::vector<geometry::Homography> homographies;
  Var<float> match;  // [P, 1, h, w], null when P = 0
  Var<float> confidence;
  Var<float> weights;
  Var<float> scene_count;
};

/// SVCC + homography net + match, distance and confidence nets.
class MultiViewCounter {
 public:
  MultiViewCounter(const ModelConfig& config, std::uint64_t seed);
  MultiViewCounter(const MultiViewCounter&) = delete;
  MultiViewCounter& operator=(const MultiViewCounter&) = delete;

  const ModelConfig& config() const { return config_; }

  svcc::CountingNet<float>& counting() { return counting_; }
  const svcc::CountingNet<float>& counting() const { return counting_; }
  mwe::HomographyNet<float>& homography() { return homography_; }
  const mwe::HomographyNet<float>& homography() const { return homography_; }

  ParameterSet<float>& svcc_parameters() { return counting_.parameters(); }
  ParameterSet<float>& homography_parameters() { return homography_.parameters(); }
  ParameterSet<float>& fusion_parameters() { return fusion_params_; }
  /// Every parameter under "svcc.", "homography." or "fusion." names.
  ParameterSet<float> all_parameters();

  Var<float> images(const scenesim::AnnotationReader& reader, int frame, const std::vector<int>& views) const;
  Var<float> distances(const scenesim::AnnotationReader& reader, int frame, const std::vector<int>& views) const;

  FrozenInputs run_frozen(const scenesim::AnnotationReader& reader, int frame, const std::vector<int>& views) const;
  std::vector<geometry::Homography> predict_homographies(const Tensor<float>& homography_features,
                                                         const std::vector<mwe::ViewPair>& pairs) const;
  /// Weights and the scene count from frozen inputs. With unit_weights, W is
  /// forced to 1 (the naive sum).
  FusionOutput fuse(const FrozenInputs& inputs, const std::vector<geometry::Homography>& homographies,
                    bool unit_weights = false) const;
  /// Feeds an all-zero distance map to the confidence branch (evaluation-time ablation).
  void set_distance_zeroed(bool on) { distance_zeroed_ = on; }

  /// run_frozen + predicted homographies + fuse, without a graph.
  FusionOutput predict(const scenesim::AnnotationReader& reader, int frame, const std::vector<int>& views,
                       bool unit_weights = false) const;

 private:
  ModelConfig config_;
  Rng rng_;
  svcc::CountingNet<float> counting_;
  mwe::HomographyNet<float> homography_;
  mwe::MatchNet<float> match_;
  mwe::DistanceEncoder<float> distance_;
  mwe::ConfidenceNet<float> confidence_;
  ParameterSet<float> fusion_params_;
  bool distance_zeroed_ = false;
};

}  // namespace wscf::mvce
