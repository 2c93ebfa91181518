#include "wscf/mwe/networks.hpp"

#include <stdexcept>

#include "wscf/geometry/warp.hpp"

namespace wscf::mwe {

namespace {

template <typename T>
Var<T> gather(const Var<T>& batch, const std::vector<int>& index) {
  std::vector<Var<T>> parts;
  parts.reserve(index.size());
  for (int k : index) parts.push_back(select(batch, k));
  return stack(parts);
}

template <typename T>
Var<T> run(const std::vector<Conv2d<T>>& convs, Var<T> x) {
  for (std::size_t k = 0; k < convs.size(); ++k) {
    x = convs[k](x);
    if (k + 1 < convs.size()) x = relu(x);
  }
  return x;
}

}  // namespace

template <typename T>
Var<T> correlation_map(const Var<T>& fi, const Var<T>& fj, int pooled) {
  if (fi.shape() != fj.shape() || fi.shape().size() != 4) {
    throw ShapeError("correlation_map: feature shapes differ: " + to_string(fi.shape()) + " vs " +
                     to_string(fj.shape()));
  }
  const int h = fi.shape()[2], w = fi.shape()[3];
  if (h != w || h % pooled) {
    throw ShapeError("correlation_map: " + std::to_string(h) + "x" + std::to_string(w) +
                     " features do not pool to " + std::to_string(pooled) + "x" + std::to_string(pooled));
  }
  return cosine_correlation(fi, h == pooled ? fj : avg_pool(fj, h / pooled));
}

template <typename T>
HomographyNet<T>::HomographyNet(const MweConfig& config, Rng& rng) : pooled_(config.pooled_size) {
  extractor_ = svcc::FeatureExtractor<T>(params_, "homography.extractor.", config.homography_extractor, rng);
  const int c = config.homography_channels;
  const int in = pooled_ * pooled_;
  convs_.push_back(make_conv<T>(params_, "homography.conv1", in, c, 3, {2, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "homography.conv2", c, c, 3, {2, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "homography.conv3", c, c / 2, 3, {1, 1, 1}, rng));
  // the regression head always sees a 4x4 grid
  head_ = make_linear<T>(params_, "homography.head", (c / 2) * 16, 8, rng, 0.01);
  auto& bias = head_.bias.mutable_value();
  const auto id = geometry::Homography::identity().free_entries();
  for (int k = 0; k < 8; ++k) bias[k] = static_cast<T>(id[k]);
}

template <typename T>
Var<T> HomographyNet<T>::predict_from_correlation(const Var<T>& correlation) const {
  Var<T> x = relu(run(convs_, correlation));
  Shape s = x.shape();
  if (s[2] != s[3] || s[2] % 4) throw ShapeError("homography decoder cannot pool " + to_string(s) + " to 4x4");
  if (s[2] > 4) {
    x = avg_pool(x, s[2] / 4);
    s = x.shape();
  }
  return head_(reshape(x, {s[0], s[1] * s[2] * s[3]}));
}

template <typename T>
Var<T> HomographyNet<T>::predict(const Var<T>& features, const std::vector<ViewPair>& pairs) const {
  std::vector<int> is, js;
  for (const auto& p : pairs) {
    is.push_back(p.i);
    js.push_back(p.j);
  }
  return predict_from_correlation(correlation_map(gather(features, is), gather(features, js), pooled_));
}

namespace {
template <typename T>
std::vector<geometry::Homography> rows_to_homographies(const Tensor<T>& v) {
  if (v.rank() != 2 || v.dim(1) != 8) throw ShapeError("expected [P, 8] homography entries");
  std::vector<geometry::Homography> out;
  for (int p = 0; p < v.dim(0); ++p) {
    std::array<double, 8> e;
    for (int k = 0; k < 8; ++k) e[k] = v[static_cast<std::size_t>(p) * 8 + k];
    out.push_back(geometry::Homography::from_free_entries(e));
  }
  return out;
}
}  // namespace

std::vector<geometry::Homography> to_homographies(const Tensor<float>& v) { return rows_to_homographies(v); }
std::vector<geometry::Homography> to_homographies(const Tensor<double>& v) { return rows_to_homographies(v); }

template <typename T>
MatchNet<T>::MatchNet(int feature_channels, const MweConfig& config, Rng& rng) {
  const int c = config.match_channels;
  convs_.push_back(make_conv<T>(params_, "match.conv1", 2 * feature_channels, c, 3, {1, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "match.conv2", c, c, 3, {1, 2, 2}, rng));
  convs_.push_back(make_conv<T>(params_, "match.conv3", c, 1, 3, {1, 1, 1}, rng));
}

template <typename T>
Var<T> MatchNet<T>::operator()(const Var<T>& features, const std::vector<ViewPair>& pairs,
                               const std::vector<geometry::Homography>& homographies) const {
  if (pairs.size() != homographies.size()) throw std::invalid_argument("MatchNet: one homography per pair");
  std::vector<int> is, js;
  for (const auto& p : pairs) {
    is.push_back(p.i);
    js.push_back(p.j);
  }
  Var<T> aligned = geometry::warp_features(gather(features, js), homographies);
  return sigmoid(run(convs_, concat_channels<T>({gather(features, is), aligned})));
}

template <typename T>
DistanceEncoder<T>::DistanceEncoder(const MweConfig& config, Rng& rng) : scale_(config.distance_scale) {
  const int c = config.distance_channels;
  convs_.push_back(make_conv<T>(params_, "distance.conv1", 1, c, 3, {2, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "distance.conv2", c, c, 3, {2, 1, 1}, rng));
}

template <typename T>
Var<T> DistanceEncoder<T>::operator()(const Var<T>& distance) const {
  return relu(run(convs_, scale(distance, static_cast<T>(scale_))));
}

template <typename T>
ConfidenceNet<T>::ConfidenceNet(int feature_channels, const MweConfig& config, Rng& rng)
    : uses_distance_(config.use_distance) {
  const int c = config.confidence_channels;
  const int in = feature_channels + (uses_distance_ ? config.distance_channels : 0);
  convs_.push_back(make_conv<T>(params_, "confidence.conv1", in, c, 3, {1, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "confidence.conv2", c, c, 3, {1, 1, 1}, rng));
  convs_.push_back(make_conv<T>(params_, "confidence.conv3", c, 1, 3, {1, 1, 1}, rng));
}

template <typename T>
Var<T> ConfidenceNet<T>::operator()(const Var<T>& features, const Var<T>* distance_features) const {
  Var<T> x = features;
  if (uses_distance_) {
    if (!distance_features) throw std::invalid_argument("ConfidenceNet: distance features required");
    x = concat_channels<T>({features, *distance_features});
  }
  const T eps = static_cast<T>(kConfidenceFloor);
  return add_scalar(scale(sigmoid(run(convs_, x)), T(1) - eps), eps);
}

template Var<float> correlation_map(const Var<float>&, const Var<float>&, int);
template Var<double> correlation_map(const Var<double>&, const Var<double>&, int);
template class HomographyNet<float>;
template class HomographyNet<double>;
template class MatchNet<float>;
template class MatchNet<double>;
template class DistanceEncoder<float>;
template class DistanceEncoder<double>;
template class ConfidenceNet<float>;
template class ConfidenceNet<double>;

}  // namespace wscf::mwe
