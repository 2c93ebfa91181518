#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "wscf/mvce/evaluate.hpp"
#include "wscf/mvce/fusion.hpp"
#include "wscf/mvce/training.hpp"
#include "wscf/mwe/weights.hpp"
#include "wscf/substrate/grad_check.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::mvce {
namespace {

using geometry::Homography;

Tensor<double> random_tensor(Shape s, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(std::move(s));
  for (auto& v : t.values()) v = u(rng);
  return t;
}

double scalar(const Var<double>& v) { return v.value()[0]; }

Var<double> value(double x) { return constant(Tensor<double>({1}, x)); }

ModelConfig tiny_model() {
  ModelConfig m;
  m.counting = {4, 4, 4, 4, 10.0, -6.0};
  m.mwe.homography_extractor = m.counting;
  m.mwe.homography_channels = 4;
  m.mwe.match_channels = 4;
  m.mwe.confidence_channels = 4;
  m.mwe.distance_channels = 2;
  return m;
}

scenesim::Dataset tiny_dataset(int views = 3) {
  scenesim::SceneConfig sc;
  sc.views = views;
  sc.train_frames = 4;
  sc.test_frames = 3;
  return scenesim::generate_scene(sc);
}

TrainConfig one_epoch() {
  TrainConfig t;
  t.svcc.epochs = t.homography.epochs = t.fusion.epochs = 1;
  return t;
}

TEST(SceneCount, UnitWeightsGiveNaiveSum) {
  const auto d = random_tensor({3, 1, 4, 4}, 1, 0, 1);
  const double s = scalar(scene_count(constant(Tensor<double>(d.shape(), 1.0)), constant(d)));
  double naive = 0;
  for (double v : d.values()) naive += v;
  EXPECT_NEAR(s, naive, 1e-12);
}

TEST(SceneCount, HalfWeightsOnFullOverlap) {
  Tensor<double> d({2, 1, 2, 5}, 1.0);  // 10 people per view
  EXPECT_NEAR(scalar(scene_count(constant(Tensor<double>(d.shape(), 0.5)), constant(d))), 10.0, 1e-12);
}

TEST(SceneCount, MatchesLoopOracle) {
  const auto w = random_tensor({3, 1, 6, 5}, 2, 0.01, 1);
  const auto d = random_tensor({3, 1, 6, 5}, 3, 0, 2);
  double loop = 0;
  for (int v = 0; v < 3; ++v)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 5; ++x) loop += w.at(v, 0, y, x) * d.at(v, 0, y, x);
  EXPECT_NEAR(scalar(scene_count(constant(w), constant(d))), loop, 1e-6);
}

TEST(SceneCount, ShapeMismatchThrows) {
  EXPECT_THROW(scene_count(constant(Tensor<double>({2, 1, 4, 4})), constant(Tensor<double>({3, 1, 4, 4}))),
               ShapeError);
}

TEST(SceneCount, MonotoneInDensity) {
  const auto w = random_tensor({2, 1, 4, 4}, 4, 0.01, 1);
  auto d = random_tensor({2, 1, 4, 4}, 5, 0, 1);
  const double before = scalar(scene_count(constant(w), constant(d)));
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    d.values()[rng() % d.size()] += 0.1;
    const double after = scalar(scene_count(constant(w), constant(d)));
    EXPECT_GE(after, before);
  }
}

TEST(LossScene, Values) {
  EXPECT_EQ(scalar(loss_scene(value(10.0), 10.0)), 0.0);
  EXPECT_NEAR(scalar(loss_scene(value(12.0), 10.0)), 4.0, 1e-12);
  EXPECT_THROW(loss_scene(value(1.0), -1.0), std::invalid_argument);
}

TEST(LossScene, GradientMatchesFiniteDifferences) {
  auto f = [](const Var<double>& s) { return loss_scene(s, 7.5); };
  EXPECT_LT(grad_check(f, Tensor<double>({1}, 3.25)).max_relative_error, 1e-6);
}

TEST(TotalLoss, LinearCombination) {
  EXPECT_EQ(scalar(total_loss(value(0), value(0), value(0), value(0), {})), 0.0);
  EXPECT_NEAR(scalar(total_loss(value(1), value(2), value(3), value(4), {})), 10.0, 1e-12);
  EXPECT_NEAR(scalar(total_loss(value(1), value(2), value(3), value(4), {0.5, 2, 0})), 8.0, 1e-12);
  EXPECT_THROW(total_loss(value(1), value(2), value(3), value(4), {-1, 1, 1}), std::invalid_argument);
}

TEST(Fusion, DuplicatedViewsDedupToOneView) {
  for (int v : {2, 3, 4}) {
    const auto d1 = random_tensor({1, 1, 8, 8}, 10 + v, 0, 0.5);
    Tensor<double> d({v, 1, 8, 8});
    for (int i = 0; i < v; ++i) std::copy(d1.values().begin(), d1.values().end(), d.values().begin() + i * 64);
    const auto pairs = mwe::ordered_pairs(v);
    const std::vector<Homography> ids(pairs.size(), Homography::identity());
    const Var<double> c = constant(Tensor<double>({v, 1, 8, 8}, 0.7));
    const Var<double> ones = constant(Tensor<double>({static_cast<int>(pairs.size()), 1, 8, 8}, 1.0));
    const Var<double> zeros = constant(Tensor<double>({static_cast<int>(pairs.size()), 1, 8, 8}, 0.0));
    double sum1 = 0, naive = 0;
    for (double x : d1.values()) sum1 += x;
    for (double x : d.values()) naive += x;
    EXPECT_NEAR(scalar(scene_count(mwe::compute_weights(c, ones, pairs, ids), constant(d))), sum1, 1e-5);
    EXPECT_NEAR(scalar(scene_count(mwe::compute_weights(c, zeros, pairs, ids), constant(d))), naive, 1e-6);
  }
}

TEST(Evaluate, SingleViewEqualsThatViewsCount) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 3);
  const EvalReport r = evaluate(&model, ds.test, {1});
  scenesim::AnnotationReader reader(ds.test);
  NoGradGuard guard;
  for (int f = 0; f < reader.frame_count(); ++f) {
    const Var<float> d = model.counting().predict_density_from_images(model.images(reader, f, {1}));
    EXPECT_EQ(static_cast<float>(r.rows[f].s_pred), sum(d).value()[0]);
    EXPECT_EQ(r.rows[f].s_gt, reader.view_count(f, 1));
  }
}

TEST(Evaluate, DeterministicAndCsv) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 3);
  std::ostringstream a, b;
  write_csv(a, evaluate(&model, ds.test, {0, 2}));
  write_csv(b, evaluate(&model, ds.test, {0, 2}));
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "frame_id,views,S_pred,S_gt,abs_err,rel_err");
  int rows = 0;
  std::string last;
  while (std::getline(lines, line)) {
    ++rows;
    last = line;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(last.rfind("aggregate,", 0), 0u);
}

TEST(Evaluate, RejectsBadSubsets) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 3);
  EXPECT_THROW(evaluate(&model, ds.test, {}), std::invalid_argument);
  EXPECT_THROW(evaluate(&model, ds.test, {0, 3}), std::invalid_argument);
  EXPECT_THROW(evaluate(&model, ds.test, {1, 1}), std::invalid_argument);
}

TEST(Evaluate, AggregatesExcludeZeroCountFrames) {
  EvalReport a;
  a.rows.push_back({0, {0}, 2.0, 0.0, 2.0, std::nan("")});
  a.rows.push_back({1, {0}, 9.0, 10.0, 1.0, 0.1});
  a.rows.push_back({2, {0}, 6.0, 4.0, 2.0, 0.5});
  const EvalReport m = merge_reports({a});
  EXPECT_NEAR(m.mae, 5.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.nae, 0.3, 1e-12);
  EXPECT_EQ(m.excluded_zero, 1);
}

TEST(Evaluate, OraclePipelineIsNearExact) {
  const auto ds = scenesim::generate_scene(scenesim::SceneConfig{});
  const EvalReport r = evaluate(nullptr, ds.test, {0, 1, 2}, Pipeline::kOracle);
  EXPECT_LT(r.nae, 0.05);
  const EvalReport one = evaluate(nullptr, ds.test, {2}, Pipeline::kOracle);
  EXPECT_LT(one.mae, 1e-4);
}

TEST(Training, FusionNeedsStageOne) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 1);
  StagedTrainer trainer(model, ds.train, one_epoch());
  EXPECT_THROW(trainer.train_fusion(), MissingPrerequisite);
  trainer.train_svcc();
  EXPECT_THROW(trainer.train_fusion(), MissingPrerequisite);
}

TEST(Training, FusionLeavesStageOneUntouched) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 1);
  std::vector<std::vector<float>> svcc, hom;
  train_staged(model, ds.train, one_epoch(), nullptr, [&](Stage s, StagedTrainer&, const std::vector<EpochLoss>&) {
    if (s != Stage::kHomography) return;
    for (const auto& [n, v] : model.svcc_parameters().items()) svcc.push_back(v.value().storage());
    for (const auto& [n, v] : model.homography_parameters().items()) hom.push_back(v.value().storage());
  });
  std::size_t k = 0;
  for (const auto& [n, v] : model.svcc_parameters().items()) EXPECT_EQ(v.value().storage(), svcc[k++]) << n;
  k = 0;
  for (const auto& [n, v] : model.homography_parameters().items()) EXPECT_EQ(v.value().storage(), hom[k++]) << n;
}

TEST(Training, WeakModeNeverReadsLocationsForSvcc) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 1);
  scenesim::AccessLog log;
  train_staged(model, ds.train, one_epoch(), &log);
  using scenesim::AnnotationField;
  EXPECT_EQ(log.count(scenesim::kSvccLossPath, AnnotationField::kHeadPoints), 0u);
  EXPECT_EQ(log.count(scenesim::kSvccLossPath, AnnotationField::kDensityMap), 0u);
  EXPECT_GT(log.count(scenesim::kSvccLossPath, AnnotationField::kViewCount), 0u);
  EXPECT_GT(log.count(scenesim::kHomographyGtPath, AnnotationField::kHeadPoints), 0u);
  EXPECT_GT(log.count(scenesim::kMatchGtPath, AnnotationField::kHeadPoints), 0u);
  for (const auto& [key, n] : log.snapshot()) {
    if (key.second == AnnotationField::kHeadPoints) {
      EXPECT_TRUE(key.first == scenesim::kHomographyGtPath || key.first == scenesim::kMatchGtPath) << key.first;
    }
  }
}

TEST(Training, FullModeReadsDensityThroughTheAuditedPath) {
  const auto ds = tiny_dataset();
  MultiViewCounter model(tiny_model(), 1);
  scenesim::AccessLog log;
  TrainConfig t = one_epoch();
  t.supervision = Supervision::kFull;
  StagedTrainer(model, ds.train, t, &log).train_svcc();
  EXPECT_GT(log.count(scenesim::kSvccLossPath, scenesim::AnnotationField::kDensityMap), 0u);
}

TEST(Training, DeterministicGivenSeed) {
  const auto ds = tiny_dataset();
  auto run = [&] {
    MultiViewCounter model(tiny_model(), 5);
    std::vector<double> out;
    for (const auto& e : train_staged(model, ds.train, one_epoch())) out.push_back(e.total);
    return out;
  };
  const auto a = run();
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a, run());
}

TEST(Training, SingleViewTrainsWithoutPairs) {
  const auto ds = tiny_dataset(1);
  MultiViewCounter model(tiny_model(), 1);
  const auto curve = train_staged(model, ds.train, one_epoch());
  EXPECT_EQ(curve.size(), 2u);  // no homography epochs without pairs
  const EvalReport r = evaluate(&model, ds.test, {0});
  for (const auto& row : r.rows) EXPECT_TRUE(std::isfinite(row.s_pred));
}

TEST(Training, StageNamesRoundTrip) {
  for (Stage s : {Stage::kSvcc, Stage::kHomography, Stage::kFusion}) EXPECT_EQ(stage_from_string(to_string(s)), s);
  EXPECT_EQ(supervision_from_string("full"), Supervision::kFull);
  EXPECT_THROW(supervision_from_string("strong"), std::invalid_argument);
  EXPECT_THROW(stage_from_string("all"), std::invalid_argument);
}

}  // namespace
}  // namespace wscf::mvce
