#include "wscf/mvce/training.hpp"

#include <algorithm>
#include <numeric>

#include "wscf/mwe/weights.hpp"
#include "wscf/substrate/ops.hpp"
#include "wscf/svcc/losses.hpp"

namespace wscf::mvce {

std::string to_string(Supervision s) { return s == Supervision::kFull ? "full" : "weak"; }

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kSvcc: return "svcc";
    case Stage::kHomography: return "homography";
    case Stage::kFusion: return "fusion";
  }
  return "?";
}

Supervision supervision_from_string(const std::string& s) {
  if (s == "full") return Supervision::kFull;
  if (s == "weak") return Supervision::kWeak;
  throw std::invalid_argument("unknown supervision mode '" + s + "' (expected full or weak)");
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::kSvcc, Stage::kHomography, Stage::kFusion}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown stage '" + s + "' (expected svcc, homography or fusion)");
}

namespace {

const std::string kFusionLossPath = "fusion_loss";
const std::string kLoggingPath = "loss_logging";

Tensor<float> stack_maps(const std::vector<Tensor<float>>& maps) {
  const Shape& s = maps.front().shape();
  Tensor<float> out({static_cast<int>(maps.size()), 1, s[s.size() - 2], s[s.size() - 1]});
  auto dst = out.values().begin();
  for (const auto& m : maps) dst = std::copy(m.values().begin(), m.values().end(), dst);
  return out;
}

struct FusionExample {
  FrozenInputs inputs;
  std::vector<geometry::Homography> homographies;
  Tensor<float> match_gt;  // [P, 1, h, w]
  double scene_gt = 0;
  double l_di = 0;
  double l_h = 0;
};

}  // namespace

StagedTrainer::StagedTrainer(MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames,
                             const TrainConfig& config, scenesim::AccessLog* log)
    : model_(model), reader_(frames, config.annotations, log), config_(config) {
  if (frames.empty()) throw std::invalid_argument("training split is empty");
  all_views_.resize(reader_.views());
  std::iota(all_views_.begin(), all_views_.end(), 0);
  optimizers_[0].learning_rate = config.svcc.learning_rate;
  optimizers_[1].learning_rate = config.homography.learning_rate;
  optimizers_[2].learning_rate = config.fusion.learning_rate;
  for (const auto* s : {&config.svcc, &config.homography, &config.fusion}) {
    if (!(s->learning_rate > 0)) throw std::invalid_argument("learning rates must be positive");
    if (s->epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  }
}

std::vector<int> StagedTrainer::epoch_order(Stage stage, int epoch) const {
  std::vector<int> order(reader_.frame_count());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config_.seed * 1000003ULL + static_cast<std::uint64_t>(stage) * 7919ULL + epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Var<float> StagedTrainer::svcc_loss(const Var<float>& density, int frame, Rng& rng) const {
  scenesim::AccessScope scope(scenesim::kSvccLossPath);
  const int v = density.shape()[0];
  if (config_.supervision == Supervision::kFull) {
    std::vector<Tensor<float>> maps;
    for (int i = 0; i < v; ++i) maps.push_back(reader_.density_map(frame, all_views_[i]));
    return svcc::loss_full(density, constant(stack_maps(maps)));
  }
  const int h = density.shape()[2], w = density.shape()[3];
  std::vector<Var<float>> counts;
  std::vector<double> gt;
  std::vector<svcc::NestedCounts<float>> chains;
  for (int i = 0; i < v; ++i) {
    const Var<float> di = reshape(select(density, i), {h, w});
    counts.push_back(sum(di));
    gt.push_back(reader_.view_count(frame, all_views_[i]));
    chains.push_back(svcc::nested_counts(di, svcc::sample_nested_crops(h, w, config_.nested_crops, rng)));
  }
  return svcc::loss_weak(counts, gt, chains, config_.ranking_weight);
}

std::vector<EpochLoss> StagedTrainer::train_svcc() {
  auto& params = model_.svcc_parameters();
  params.set_trainable(true);
  auto& opt = optimizer(Stage::kSvcc);
  Rng crop_rng(config_.seed * 31ULL + 1);
  std::vector<EpochLoss> curve;
  for (int e = 0; e < config_.svcc.epochs; ++e) {
    EpochLoss rec{Stage::kSvcc, e};
    for (int f : epoch_order(Stage::kSvcc, e)) {
      params.zero_grad();
      const Var<float> d = model_.counting().predict_density_from_images(model_.images(reader_, f, all_views_));
      const Var<float> loss = svcc_loss(d, f, crop_rng);
      backward(loss);
      adam_step(params, opt);
      rec.l_di += loss.value()[0];
    }
    rec.l_di /= reader_.frame_count();
    rec.total = config_.weights.lambda * rec.l_di;
    curve.push_back(rec);
  }
  params.zero_grad();
  mark_completed(Stage::kSvcc);
  return curve;
}

std::vector<EpochLoss> StagedTrainer::train_homography() {
  auto& params = model_.homography_parameters();
  params.set_trainable(true);
  auto& opt = optimizer(Stage::kHomography);
  const auto pairs = mwe::ordered_pairs(static_cast<int>(all_views_.size()));
  std::vector<EpochLoss> curve;
  if (pairs.empty()) {
    mark_completed(Stage::kHomography);
    return curve;
  }
  std::vector<std::vector<geometry::Homography>> gt(reader_.frame_count());
  for (int f = 0; f < reader_.frame_count(); ++f) {
    for (const auto& p : pairs) gt[f].push_back(reader_.homography(f, p.i, p.j));
  }
  for (int e = 0; e < config_.homography.epochs; ++e) {
    EpochLoss rec{Stage::kHomography, e};
    for (int f : epoch_order(Stage::kHomography, e)) {
      params.zero_grad();
      const auto& net = model_.homography();
      const Var<float> pred = net.predict(net.extract_features(model_.images(reader_, f, all_views_)), pairs);
      const Var<float> loss = mwe::loss_homography(pred, pairs, gt[f], pairs);
      backward(loss);
      adam_step(params, opt);
      rec.l_h += loss.value()[0];
    }
    rec.l_h /= reader_.frame_count();
    rec.total = config_.weights.gamma * rec.l_h;
    curve.push_back(rec);
  }
  params.zero_grad();
  mark_completed(Stage::kHomography);
  return curve;
}

std::vector<EpochLoss> StagedTrainer::train_fusion() {
  std::string missing;
  if (!completed(Stage::kSvcc)) missing += " svcc";
  if (!completed(Stage::kHomography)) missing += " homography";
  if (!missing.empty()) throw MissingPrerequisite("fusion stage needs trained stage-1 modules; missing:" + missing);

  model_.svcc_parameters().set_trainable(false);
  model_.homography_parameters().set_trainable(false);
  auto& params = model_.fusion_parameters();
  params.set_trainable(true);
  auto& opt = optimizer(Stage::kFusion);

  const auto pairs = mwe::ordered_pairs(static_cast<int>(all_views_.size()));
  std::vector<FusionExample> examples(reader_.frame_count());
  Rng log_rng(config_.seed * 31ULL + 2);
  for (int f = 0; f < reader_.frame_count(); ++f) {
    auto& ex = examples[f];
    ex.inputs = model_.run_frozen(reader_, f, all_views_);
    ex.homographies = model_.predict_homographies(ex.inputs.homography_features, pairs);
    {
      scenesim::AccessScope scope(kFusionLossPath);
      ex.scene_gt = reader_.scene_count(f);
      std::vector<Tensor<float>> maps;
      for (const auto& p : pairs) maps.push_back(reader_.match_map(f, p.i, p.j));
      if (!maps.empty()) ex.match_gt = stack_maps(maps);
    }
    // logged only: the producers of these terms are frozen
    NoGradGuard guard;
    ex.l_di = svcc_loss(constant(ex.inputs.density), f, log_rng).value()[0];
    if (!pairs.empty()) {
      scenesim::AccessScope scope(kLoggingPath);
      std::vector<geometry::Homography> gt;
      for (const auto& p : pairs) gt.push_back(reader_.homography(f, p.i, p.j));
      Tensor<float> pred({static_cast<int>(pairs.size()), 8});
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto fe = ex.homographies[k].free_entries();
        for (int c = 0; c < 8; ++c) pred.at(static_cast<int>(k), c) = static_cast<float>(fe[c]);
      }
      ex.l_h = mwe::loss_homography(constant(pred), pairs, gt, pairs).value()[0];
    }
  }

  const double beta = config_.use_match_supervision ? config_.weights.beta : 0.0;
  std::vector<EpochLoss> curve;
  for (int e = 0; e < config_.fusion.epochs; ++e) {
    EpochLoss rec{Stage::kFusion, e};
    for (int f : epoch_order(Stage::kFusion, e)) {
      const auto& ex = examples[f];
      params.zero_grad();
      const FusionOutput out = model_.fuse(ex.inputs, ex.homographies);
      const Var<float> l_s = loss_scene(out.scene_count, ex.scene_gt);
      Var<float> l_d = constant(Tensor<float>({1}, 0.f));
      if (out.match) l_d = mwe::loss_match(out.match, ex.match_gt);
      const Var<float> zero = constant(Tensor<float>({1}, 0.f));
      LossWeights w = config_.weights;
      w.beta = beta;
      const Var<float> objective = total_loss(l_s, zero, l_d, zero, w);
      backward(objective);
      adam_step(params, opt);
      rec.l_s += l_s.value()[0];
      rec.l_d += l_d.value()[0];
      rec.l_di += ex.l_di;
      rec.l_h += ex.l_h;
    }
    const double n = reader_.frame_count();
    rec.l_s /= n;
    rec.l_d /= n;
    rec.l_di /= n;
    rec.l_h /= n;
    rec.total = rec.l_s + config_.weights.lambda * rec.l_di + beta * rec.l_d + config_.weights.gamma * rec.l_h;
    curve.push_back(rec);
  }
  params.zero_grad();
  mark_completed(Stage::kFusion);
  return curve;
}

std::vector<EpochLoss> StagedTrainer::run(Stage stage) {
  switch (stage) {
    case Stage::kSvcc: return train_svcc();
    case Stage::kHomography: return train_homography();
    case Stage::kFusion: return train_fusion();
  }
  return {};
}

std::vector<EpochLoss> train_staged(MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames,
                                    const TrainConfig& config, scenesim::AccessLog* log,
                                    const StageCallback& after_stage) {
  StagedTrainer trainer(model, frames, config, log);
  std::vector<EpochLoss> all;
  for (Stage s : {Stage::kSvcc, Stage::kHomography, Stage::kFusion}) {
    auto curve = trainer.run(s);
    if (after_stage) after_stage(s, trainer, curve);
    all.insert(all.end(), curve.begin(), curve.end());
  }
  return all;
}

}  // namespace wscf::mvce
