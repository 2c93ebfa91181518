#include "wscf/mvce/model.hpp"

#include "wscf/mvce/fusion.hpp"
#include "wscf/mwe/weights.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::mvce {

MultiViewCounter::MultiViewCounter(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      rng_(seed),
      counting_(config.counting, rng_),
      homography_(config.mwe, rng_),
      match_(config.counting.feature_channels, config.mwe, rng_),
      distance_(config.mwe, rng_),
      confidence_(config.mwe.homography_extractor.feature_channels, config.mwe, rng_) {
  fusion_params_.append(match_.parameters(), "");
  if (config.mwe.use_distance) fusion_params_.append(distance_.parameters(), "");
  fusion_params_.append(confidence_.parameters(), "");
}

ParameterSet<float> MultiViewCounter::all_parameters() {
  ParameterSet<float> all;
  all.append(svcc_parameters(), "svcc.");
  all.append(homography_parameters(), "");
  all.append(fusion_parameters(), "fusion.");
  return all;
}

Var<float> MultiViewCounter::images(const scenesim::AnnotationReader& reader, int frame,
                                    const std::vector<int>& views) const {
  std::vector<const Tensor<float>*> ims;
  for (int v : views) ims.push_back(&reader.image(frame, v));
  return svcc::image_batch<float>(ims);
}

Var<float> MultiViewCounter::distances(const scenesim::AnnotationReader& reader, int frame,
                                       const std::vector<int>& views) const {
  std::vector<const Tensor<float>*> ds;
  for (int v : views) ds.push_back(&reader.distance(frame, v));
  return svcc::image_batch<float>(ds);
}

FrozenInputs MultiViewCounter::run_frozen(const scenesim::AnnotationReader& reader, int frame,
                                          const std::vector<int>& views) const {
  NoGradGuard guard;
  FrozenInputs out;
  out.views = views;
  const Var<float> x = images(reader, frame, views);
  const Var<float> fc = counting_.extract_features(x);
  out.counting_features = fc.value();
  out.density = counting_.predict_density(fc).value();
  out.homography_features = homography_.extract_features(x).value();
  out.distance = distances(reader, frame, views).value();
  return out;
}

std::vector<geometry::Homography> MultiViewCounter::predict_homographies(
    const Tensor<float>& homography_features, const std::vector<mwe::ViewPair>& pairs) const {
  if (pairs.empty()) return {};
  NoGradGuard guard;
  return mwe::to_homographies(homography_.predict(constant(homography_features), pairs).value());
}

FusionOutput MultiViewCounter::fuse(const FrozenInputs& in, const std::vector<geometry::Homography>& hs,
                                    bool unit_weights) const {
  FusionOutput out;
  const int v = static_cast<int>(in.views.size());
  out.pairs = mwe::ordered_pairs(v);
  if (hs.size() != out.pairs.size()) throw std::invalid_argument("fuse: one homography per ordered pair");
  out.homographies = hs;
  const Var<float> density = constant(in.density);
  if (unit_weights) {
    out.weights = constant(Tensor<float>(in.density.shape(), 1.f));
    out.scene_count = scene_count(out.weights, density);
    return out;
  }
  if (!out.pairs.empty()) out.match = match_(constant(in.counting_features), out.pairs, hs);
  const Var<float> fh = constant(in.homography_features);
  if (confidence_.uses_distance()) {
    const Var<float> t =
        distance_(constant(distance_zeroed_ ? Tensor<float>(in.distance.shape()) : in.distance));
    out.confidence = confidence_(fh, &t);
  } else {
    out.confidence = confidence_(fh, nullptr);
  }
  out.weights = mwe::compute_weights(out.confidence, out.match, out.pairs, hs);
  out.scene_count = scene_count(out.weights, density);
  return out;
}

FusionOutput MultiViewCounter::predict(const scenesim::AnnotationReader& reader, int frame,
                                       const std::vector<int>& views, bool unit_weights) const {
  NoGradGuard guard;
  const FrozenInputs in = run_frozen(reader, frame, views);
  return fuse(in, predict_homographies(in.homography_features, mwe::ordered_pairs(static_cast<int>(views.size()))),
              unit_weights);
}

}  // namespace wscf::mvce
