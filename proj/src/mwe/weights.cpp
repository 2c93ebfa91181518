#include "wscf/mwe/weights.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "wscf/geometry/warp.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::mwe {

template <typename T>
Var<T> compute_weights(const Var<T>& confidence, const Var<T>& match, const std::vector<ViewPair>& pairs,
                       const std::vector<geometry::Homography>& homographies) {
  const Shape& cs = confidence.shape();
  if (cs.size() != 4 || cs[1] != 1) throw ShapeError("compute_weights: confidence must be [V, 1, h, w]");
  if (pairs.size() != homographies.size()) throw std::invalid_argument("compute_weights: one homography per pair");
  const int views = cs[0];
  std::vector<Var<T>> terms(views);
  if (!pairs.empty()) {
    if (match.shape() != Shape{static_cast<int>(pairs.size()), 1, cs[2], cs[3]}) {
      throw ShapeError("compute_weights: match maps " + to_string(match.shape()) + " do not fit " +
                       std::to_string(pairs.size()) + " pairs of " + to_string(cs));
    }
    std::vector<Var<T>> sources;
    for (const auto& p : pairs) {
      if (p.i == p.j || p.i < 0 || p.j < 0 || p.i >= views || p.j >= views) {
        throw std::invalid_argument("compute_weights: invalid view pair");
      }
      sources.push_back(select(confidence, p.j));
    }
    Var<T> weighted = mul(geometry::warp_features(stack(sources), homographies), match);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      Var<T> t = select(weighted, static_cast<int>(k));
      terms[pairs[k].i] = terms[pairs[k].i] ? add(terms[pairs[k].i], t) : t;
    }
  }
  std::vector<Var<T>> out;
  for (int i = 0; i < views; ++i) {
    Var<T> ci = select(confidence, i);
    if (!terms[i]) {
      out.push_back(div(ci, ci));  // exactly 1, keeps the graph uniform
      continue;
    }
    out.push_back(div(ci, add(ci, terms[i])));
  }
  return stack(out);
}

template <typename T>
Var<T> loss_homography(const Var<T>& predicted, const std::vector<ViewPair>& predicted_pairs,
                       const std::vector<geometry::Homography>& gt, const std::vector<ViewPair>& gt_pairs) {
  if (gt.size() != gt_pairs.size()) throw std::invalid_argument("loss_homography: one GT homography per pair");
  if (predicted.shape() != Shape{static_cast<int>(predicted_pairs.size()), 8}) {
    throw ShapeError("loss_homography: predictions " + to_string(predicted.shape()) + " for " +
                     std::to_string(predicted_pairs.size()) + " pairs");
  }
  std::map<ViewPair, std::size_t> gt_index;
  for (std::size_t k = 0; k < gt_pairs.size(); ++k) {
    if (gt_pairs[k].i == gt_pairs[k].j) throw std::invalid_argument("loss_homography: pair with i == j");
    if (!gt_index.emplace(gt_pairs[k], k).second) throw std::invalid_argument("loss_homography: duplicate GT pair");
  }
  std::set<ViewPair> seen;
  Tensor<T> target(predicted.shape());
  for (std::size_t k = 0; k < predicted_pairs.size(); ++k) {
    auto it = gt_index.find(predicted_pairs[k]);
    if (it == gt_index.end() || !seen.insert(predicted_pairs[k]).second) {
      throw std::invalid_argument("loss_homography: predicted and GT pair sets differ");
    }
    const auto e = gt[it->second].free_entries();
    for (int c = 0; c < 8; ++c) target[k * 8 + c] = static_cast<T>(e[c]);
  }
  if (seen.size() != gt_index.size()) throw std::invalid_argument("loss_homography: predicted and GT pair sets differ");
  return sum(square(sub(predicted, constant(std::move(target)))));
}

template <typename T>
Var<T> loss_match(const Var<T>& match, const Tensor<T>& gt) {
  if (match.shape() != gt.shape()) {
    throw ShapeError("loss_match: " + to_string(match.shape()) + " vs " + to_string(gt.shape()));
  }
  for (T v : gt.values()) {
    if (v != T(0) && v != T(1)) throw std::invalid_argument("loss_match: GT match map is not binary");
  }
  Var<T> g = constant(gt);
  return sum(square(sub(mul(match, g), g)));
}

#define WSCF_INSTANTIATE(T)                                                                              \
  template Var<T> compute_weights(const Var<T>&, const Var<T>&, const std::vector<ViewPair>&,            \
                                  const std::vector<geometry::Homography>&);                             \
  template Var<T> loss_homography(const Var<T>&, const std::vector<ViewPair>&,                            \
                                  const std::vector<geometry::Homography>&, const std::vector<ViewPair>&); \
  template Var<T> loss_match(const Var<T>&, const Tensor<T>&);
WSCF_INSTANTIATE(float)
WSCF_INSTANTIATE(double)
#undef WSCF_INSTANTIATE

}  // namespace wscf::mwe
