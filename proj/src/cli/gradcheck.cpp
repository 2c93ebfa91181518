#include "wscf/cli/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "wscf/geometry/warp.hpp"
#include "wscf/mvce/fusion.hpp"
#include "wscf/mwe/weights.hpp"
#include "wscf/substrate/grad_check.hpp"
#include "wscf/substrate/ops.hpp"
#include "wscf/svcc/losses.hpp"

namespace wscf::cli {

namespace {

using geometry::Homography;

constexpr int kMap = 8;               // spatial size of the random maps
constexpr double kKinkMargin = 1e-3;  // minimum |hinge argument| for an accepted point

Tensor<double> uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = u(rng);
  return t;
}

Homography random_homography(Rng& rng) {
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  std::array<double, 8> e{1 + u(rng), u(rng), u(rng), u(rng), 1 + u(rng), u(rng), 0.3 * u(rng), 0.3 * u(rng)};
  return Homography::from_free_entries(e);
}

std::vector<Homography> random_homographies(int n, Rng& rng) {
  std::vector<Homography> hs;
  for (int k = 0; k < n; ++k) hs.push_back(random_homography(rng));
  return hs;
}

// One evaluation point: a list of (function, variable) checks, or a rejection.
struct Probe {
  std::vector<std::pair<ScalarFunction, Tensor<double>>> checks;
  bool rejected = false;
  std::string note;
  std::function<std::string()> extra;  // additional exact property, empty string when it holds
};

double hinge_margin(const std::vector<svcc::NestedCounts<double>>& chains) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& ch : chains) {
    for (std::size_t j = 0; j < ch.counts.size(); ++j) {
      for (std::size_t k = j + 1; k < ch.counts.size(); ++k) {
        m = std::min(m, std::abs(ch.counts[k].value()[0] - ch.counts[j].value()[0]));
      }
    }
  }
  return m;
}

Probe probe_loss_weak(Rng& rng, bool at_kink) {
  const int views = 2;
  Tensor<double> d = uniform({views, kMap, kMap}, rng, -0.5, 1.0);
  std::vector<std::vector<svcc::CropRegion>> crops;
  std::vector<double> gt;
  std::uniform_int_distribution<int> count(0, 30);
  for (int v = 0; v < views; ++v) {
    crops.push_back(svcc::sample_nested_crops(kMap, kMap, 3, rng));
    gt.push_back(count(rng));
  }
  if (at_kink) {
    // zero the ring A_1 \ A_2 of the first view so that C(A_1) == C(A_2)
    const auto& a1 = crops[0][0];
    const auto& a2 = crops[0][1];
    for (int y = a1.y0; y < a1.y1; ++y) {
      for (int x = a1.x0; x < a1.x1; ++x) {
        if (!a2.contains({x, y, x + 1, y + 1})) d.values()[static_cast<std::size_t>(y) * kMap + x] = 0;
      }
    }
  }
  auto f = [=](const Var<double>& dv) {
    std::vector<Var<double>> counts;
    std::vector<svcc::NestedCounts<double>> chains;
    for (int v = 0; v < views; ++v) {
      const Var<double> dm = select(dv, v);
      counts.push_back(sum(dm));
      chains.push_back(svcc::nested_counts(dm, crops[v]));
    }
    return svcc::loss_weak(counts, gt, chains);
  };
  Probe p;
  {
    NoGradGuard guard;
    const Var<double> dv = constant(d);
    std::vector<svcc::NestedCounts<double>> chains;
    for (int v = 0; v < views; ++v) chains.push_back(svcc::nested_counts(select(dv, v), crops[v]));
    const double margin = hinge_margin(chains);
    if (margin < kKinkMargin) {
      p.rejected = true;
      p.note = "hinge argument " + std::to_string(margin) + " within kink margin";
      return p;
    }
  }
  p.checks.emplace_back(f, d);
  return p;
}

Probe probe_loss_full(Rng& rng) {
  const Tensor<double> gt = uniform({2, 1, kMap, kMap}, rng, 0, 0.5);
  Probe p;
  p.checks.emplace_back([gt](const Var<double>& d) { return svcc::loss_full(d, constant(gt)); },
                        uniform({2, 1, kMap, kMap}, rng, 0, 0.5));
  return p;
}

Probe probe_loss_homography(Rng& rng) {
  const auto pairs = mwe::ordered_pairs(3);
  const auto gt = random_homographies(static_cast<int>(pairs.size()), rng);
  Probe p;
  p.checks.emplace_back(
      [pairs, gt](const Var<double>& pred) { return mwe::loss_homography(pred, pairs, gt, pairs); },
      uniform({static_cast<int>(pairs.size()), 8}, rng, -1, 1));
  return p;
}

Probe probe_loss_match(Rng& rng) {
  Tensor<double> gt({6, 1, kMap, kMap});
  std::bernoulli_distribution coin(0.4);
  for (auto& v : gt.values()) v = coin(rng) ? 1.0 : 0.0;
  const Tensor<double> m = uniform(gt.shape(), rng, 0.01, 0.99);
  Probe p;
  p.checks.emplace_back([gt](const Var<double>& mv) { return mwe::loss_match(mv, gt); }, m);
  p.extra = [gt, m] {
    Var<double> mv = leaf(m, true);
    backward(mwe::loss_match(mv, gt));
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (gt[k] == 0 && mv.grad()[k] != 0) return std::string("nonzero gradient at a GT-zero cell");
    }
    return std::string();
  };
  return p;
}

Probe probe_compute_weights(Rng& rng) {
  const int v = 3;
  const auto pairs = mwe::ordered_pairs(v);
  const auto hs = random_homographies(static_cast<int>(pairs.size()), rng);
  const Tensor<double> c = uniform({v, 1, kMap, kMap}, rng, 0.1, 1.0);
  const Tensor<double> m = uniform({static_cast<int>(pairs.size()), 1, kMap, kMap}, rng, 0.0, 1.0);
  const Tensor<double> r = uniform({v, 1, kMap, kMap}, rng, -1, 1);
  Probe p;
  p.checks.emplace_back(
      [=](const Var<double>& cv) { return sum(mul(mwe::compute_weights(cv, constant(m), pairs, hs), constant(r))); },
      c);
  p.checks.emplace_back(
      [=](const Var<double>& mv) { return sum(mul(mwe::compute_weights(constant(c), mv, pairs, hs), constant(r))); },
      m);
  return p;
}

Probe probe_scene_count(Rng& rng) {
  const Tensor<double> w = uniform({3, 1, kMap, kMap}, rng, 0.05, 1.0);
  const Tensor<double> d = uniform({3, 1, kMap, kMap}, rng, 0.0, 0.3);
  const double s_gt = std::uniform_real_distribution<double>(0, 20)(rng);
  Probe p;
  p.checks.emplace_back(
      [=](const Var<double>& wv) { return mvce::loss_scene(mvce::scene_count(wv, constant(d)), s_gt); }, w);
  p.checks.emplace_back(
      [=](const Var<double>& dv) { return mvce::loss_scene(mvce::scene_count(constant(w), dv), s_gt); }, d);
  return p;
}

Probe probe_warp(Rng& rng) {
  const auto hs = random_homographies(2, rng);
  const Tensor<double> r = uniform({2, 3, kMap, kMap}, rng, -1, 1);
  Probe p;
  p.checks.emplace_back(
      [=](const Var<double>& f) { return sum(mul(geometry::warp_features(f, hs), constant(r))); },
      uniform({2, 3, kMap, kMap}, rng, -1, 1));
  return p;
}

}  // namespace

const std::vector<std::string>& gradcheck_components() {
  static const std::vector<std::string> names{"loss_weak",       "loss_full",  "loss_homography", "loss_match",
                                              "compute_weights", "scene_count", "warp_features"};
  return names;
}

GradcheckOutcome run_gradcheck(const std::string& component, const GradcheckOptions& options) {
  const auto& names = gradcheck_components();
  if (std::find(names.begin(), names.end(), component) == names.end()) {
    std::string valid;
    for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown gradcheck component '" + component + "'; valid: " + valid);
  }
  if (options.points < 1) throw std::invalid_argument("gradcheck needs at least one point");
  GradcheckOutcome out;
  out.component = component;
  Rng rng(options.seed);
  const int max_attempts = options.points * 20;
  for (int attempt = 0; out.accepted < options.points; ++attempt) {
    if (attempt >= max_attempts) {
      out.detail = "could not find enough non-kink points";
      return out;
    }
    Probe probe;
    if (component == "loss_weak") probe = probe_loss_weak(rng, options.inject_kink && attempt == 0);
    else if (component == "loss_full") probe = probe_loss_full(rng);
    else if (component == "loss_homography") probe = probe_loss_homography(rng);
    else if (component == "loss_match") probe = probe_loss_match(rng);
    else if (component == "compute_weights") probe = probe_compute_weights(rng);
    else if (component == "scene_count") probe = probe_scene_count(rng);
    else probe = probe_warp(rng);

    GradcheckPoint point;
    point.attempt = attempt;
    if (probe.rejected) {
      point.rejected = true;
      point.note = probe.note;
      ++out.rejected;
      out.points.push_back(point);
      continue;
    }
    for (const auto& [f, x] : probe.checks) {
      point.max_relative_error = std::max(point.max_relative_error, grad_check(f, x).max_relative_error);
    }
    if (probe.extra) {
      point.note = probe.extra();
      if (!point.note.empty() && out.detail.empty()) out.detail = point.note;
    }
    out.max_relative_error = std::max(out.max_relative_error, point.max_relative_error);
    ++out.accepted;
    out.points.push_back(point);
  }
  out.passed = out.max_relative_error < options.tolerance && out.detail.empty();
  return out;
}

}  // namespace wscf::cli
