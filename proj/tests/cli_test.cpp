#include <cmath>
#include <fstream>
#include <sstream>

#include "gtest/gtest.h"
#include "wscf/cli/commands.hpp"
#include "wscf/cli/gradcheck.hpp"
#include "wscf/scenesim/dataset_io.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::cli {
namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("wscf_cli_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

RunConfig tiny_run(const fs::path& root, int views = 3) {
  RunConfig c;
  c.dataset = (root / "data").string();
  c.run_dir = (root / "run").string();
  c.scene.views = views;
  c.scene.train_frames = 3;
  c.scene.test_frames = 2;
  c.model.counting = {4, 4, 4, 4, 10.0, -6.0};
  c.model.mwe.homography_extractor = c.model.counting;
  c.model.mwe.homography_channels = c.model.mwe.match_channels = c.model.mwe.confidence_channels = 4;
  c.model.mwe.distance_channels = 2;
  c.train.svcc.epochs = c.train.homography.epochs = c.train.fusion.epochs = 2;
  return c;
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.train.supervision = mvce::Supervision::kFull;
  c.train.weights = {0.5, 2, 0};
  c.model.mwe.use_distance = false;
  c.train.fusion.learning_rate = 3e-4;
  c.scene.views = 4;
  const auto j = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  auto j = to_json(RunConfig{});
  j["train"]["learning_rate"] = 1e-3;
  EXPECT_THROW(run_config_from_json(j), std::invalid_argument);
  j = to_json(RunConfig{});
  j["train"]["svcc"]["learning_rate"] = 0.0;
  EXPECT_THROW(run_config_from_json(j), std::invalid_argument);
  j = to_json(RunConfig{});
  j["train"]["supervision"] = "strong";
  EXPECT_THROW(run_config_from_json(j), std::invalid_argument);
  j = to_json(RunConfig{});
  j["stage"] = "everything";
  EXPECT_THROW(run_config_from_json(j), std::invalid_argument);
  EXPECT_NO_THROW(run_config_from_json(nlohmann::json::object()));
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.stage = "svcc";
  c.completed_stages = {"svcc"};
  c.config = to_json(RunConfig{});
  c.optimizer = {{"step_count", 12}, {"learning_rate", 1e-3}};
  Tensor<float> a({2, 3}, std::vector<float>{1.5f, -2, 0.1f, 3e-8f, 7, -0.25f});
  c.tensors.emplace_back("param/x", a);
  c.tensors.emplace_back("adam.m/x", Tensor<float>({2, 3}, 0.125f));
  return c;
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  TempDir dir;
  save_checkpoint(dir.path() / "a.ckpt", sample_checkpoint());
  const Checkpoint loaded = load_checkpoint(dir.path() / "a.ckpt");
  save_checkpoint(dir.path() / "b.ckpt", loaded);
  EXPECT_EQ(slurp(dir.path() / "a.ckpt"), slurp(dir.path() / "b.ckpt"));
  EXPECT_EQ(loaded.tensor("param/x").storage(), sample_checkpoint().tensor("param/x").storage());
  EXPECT_EQ(loaded.optimizer.at("step_count"), 12);
  EXPECT_EQ(slurp(dir.path() / "a.ckpt").substr(0, 8), "WSCFCKPT");
}

TEST(Checkpoint, DetectsCorruption) {
  TempDir dir;
  const fs::path p = dir.path() / "a.ckpt";
  save_checkpoint(p, sample_checkpoint());
  std::string bytes = slurp(p);

  auto write = [&](const std::string& b) {
    std::ofstream(p, std::ios::binary | std::ios::trunc) << b;
  };
  std::string flipped = bytes;
  flipped[flipped.size() - 5] ^= 0x40;  // inside a float blob
  write(flipped);
  EXPECT_THROW(load_checkpoint(p), CheckpointError);

  std::string version = bytes;
  version[8] = 9;
  write(version);
  EXPECT_THROW(load_checkpoint(p), CheckpointError);

  std::string magic = bytes;
  magic[0] = 'X';
  write(magic);
  EXPECT_THROW(load_checkpoint(p), CheckpointError);

  write(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(load_checkpoint(p), CheckpointError);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), CheckpointError);
}

TEST(Gen, DeterministicAndGuarded) {
  TempDir dir;
  RunConfig c = tiny_run(dir.path());
  std::ostringstream log;
  const auto m1 = cmd_gen(c, dir.path() / "a", false, log);
  const auto m2 = cmd_gen(c, dir.path() / "b", false, log);
  EXPECT_EQ(slurp(dir.path() / "a" / "manifest.json"), slurp(dir.path() / "b" / "manifest.json"));
  EXPECT_EQ(m1.frames.size(), 5u);
  EXPECT_THROW(cmd_gen(c, dir.path() / "a", false, log), std::runtime_error);
  EXPECT_NO_THROW(cmd_gen(c, dir.path() / "a", true, log));
  EXPECT_NE(log.str().find("overlap factor"), std::string::npos);
}

TEST(Gen, DefaultSplitSizesAndSingleViewWarning) {
  RunConfig c;
  EXPECT_EQ(c.scene.train_frames, 200);
  EXPECT_EQ(c.scene.test_frames, 50);
  TempDir dir;
  RunConfig one = tiny_run(dir.path(), 1);
  std::ostringstream log;
  cmd_gen(one, dir.path() / "d", false, log);
  EXPECT_NE(log.str().find("untrainable"), std::string::npos) << log.str();
}

TEST(Train, LaterStagesNameMissingCheckpoints) {
  TempDir dir;
  RunConfig c = tiny_run(dir.path());
  std::ostringstream log;
  cmd_gen(c, c.dataset, false, log);
  try {
    cmd_train(c, "fusion", log);
    FAIL() << "expected MissingPrerequisite";
  } catch (const mvce::MissingPrerequisite& e) {
    EXPECT_NE(std::string(e.what()).find("svcc.ckpt"), std::string::npos) << e.what();
  }
  cmd_train(c, "svcc", log);
  try {
    cmd_train(c, "fusion", log);
    FAIL() << "expected MissingPrerequisite";
  } catch (const mvce::MissingPrerequisite& e) {
    EXPECT_NE(std::string(e.what()).find("homography.ckpt"), std::string::npos) << e.what();
    EXPECT_EQ(std::string(e.what()).find("svcc.ckpt"), std::string::npos) << e.what();
  }
}

std::vector<std::vector<double>> read_curve(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // stage name
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

class TrainedRun : public ::testing::Test {
 protected:
  void SetUp() override {
    config_ = tiny_run(dir_.path());
    std::ostringstream log;
    cmd_gen(config_, config_.dataset, false, log);
    output_ = cmd_train(config_, "all", log);
    log_ = log.str();
  }

  TempDir dir_;
  RunConfig config_;
  TrainOutput output_;
  std::string log_;
};

TEST_F(TrainedRun, AllWritesThreeCheckpointsInOrder) {
  ASSERT_EQ(output_.checkpoints.size(), 3u);
  const char* names[] = {"svcc.ckpt", "homography.ckpt", "fusion.ckpt"};
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(output_.checkpoints[k].filename(), names[k]);
    EXPECT_TRUE(fs::exists(output_.checkpoints[k]));
  }
  EXPECT_EQ(load_checkpoint(output_.checkpoints[2]).completed_stages,
            (std::vector<std::string>{"svcc", "homography", "fusion"}));
  EXPECT_NE(log_.find("weak-supervision audit"), std::string::npos);
  for (auto s : {mvce::Stage::kSvcc, mvce::Stage::kHomography, mvce::Stage::kFusion}) {
    EXPECT_EQ(read_curve(loss_curve_path(config_.run_dir, s)).size(), 2u);
  }
}

TEST_F(TrainedRun, FrozenStagesMatchTheirCheckpoints) {
  const Checkpoint s = load_checkpoint(output_.checkpoints[0]);
  const Checkpoint h = load_checkpoint(output_.checkpoints[1]);
  const Checkpoint f = load_checkpoint(output_.checkpoints[2]);
  for (const auto& [name, t] : f.tensors) {
    if (name.rfind("param/svcc/", 0) == 0) {
      EXPECT_EQ(t.storage(), s.tensor(name).storage()) << name;
    } else if (name.rfind("param/homography/", 0) == 0) {
      EXPECT_EQ(t.storage(), h.tensor(name).storage()) << name;
    }
  }
}

TEST_F(TrainedRun, RerunReproducesLossCurves) {
  const auto first = read_curve(loss_curve_path(config_.run_dir, mvce::Stage::kFusion));
  RunConfig again = config_;
  again.run_dir = (dir_.path() / "run2").string();
  std::ostringstream log;
  cmd_train(again, "all", log);
  for (auto s : {mvce::Stage::kSvcc, mvce::Stage::kHomography, mvce::Stage::kFusion}) {
    const auto a = read_curve(loss_curve_path(config_.run_dir, s));
    const auto b = read_curve(loss_curve_path(again.run_dir, s));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t k = 0; k < a[r].size(); ++k) {
        EXPECT_NEAR(a[r][k], b[r][k], 1e-5 * std::max(1.0, std::abs(a[r][k])));
      }
  }
}

TEST_F(TrainedRun, StagewiseTrainingMatchesAll) {
  RunConfig staged = config_;
  staged.run_dir = (dir_.path() / "staged").string();
  std::ostringstream log;
  for (const char* s : {"svcc", "homography", "fusion"}) cmd_train(staged, s, log);
  EXPECT_EQ(slurp(fs::path(staged.run_dir) / "loss_fusion.csv"),
            slurp(fs::path(config_.run_dir) / "loss_fusion.csv"));
}

TEST_F(TrainedRun, EvalSingleViewAndDeterminism) {
  std::ostringstream log;
  EvalOptions one;
  one.views = {1};
  const auto ck = output_.checkpoints[2];
  const auto r = cmd_eval(ck, config_.dataset, one, dir_.path() / "one.csv", log);
  const auto model = load_model(load_checkpoint(ck));
  const auto ds = scenesim::read_dataset(config_.dataset);
  scenesim::AnnotationReader reader(ds.test);
  NoGradGuard guard;
  for (int f = 0; f < reader.frame_count(); ++f) {
    const float view_count = sum(model->counting().predict_density_from_images(model->images(reader, f, {1}))).value()[0];
    EXPECT_EQ(static_cast<float>(r.rows[f].s_pred), view_count);
  }
  EvalOptions all;
  cmd_eval(ck, config_.dataset, all, dir_.path() / "a.csv", log);
  cmd_eval(ck, config_.dataset, all, dir_.path() / "b.csv", log);
  EXPECT_EQ(slurp(dir_.path() / "a.csv"), slurp(dir_.path() / "b.csv"));
  EXPECT_NE(log.str().find("MAE"), std::string::npos);
}

TEST_F(TrainedRun, EvalRejectsBadRequests) {
  std::ostringstream log;
  EvalOptions bad;
  bad.views = {0, 5};
  EXPECT_THROW(cmd_eval(output_.checkpoints[2], config_.dataset, bad, "", log), std::invalid_argument);
  EvalOptions ablate;
  ablate.ablate_match_supervision = true;
  EXPECT_THROW(cmd_eval(output_.checkpoints[2], config_.dataset, ablate, "", log), std::invalid_argument);
  EvalOptions fused;
  EXPECT_THROW(cmd_eval(output_.checkpoints[0], config_.dataset, fused, "", log), std::invalid_argument);
  EvalOptions dist;
  dist.ablate_distance = true;
  EXPECT_NO_THROW(cmd_eval(output_.checkpoints[2], config_.dataset, dist, "", log));
}

TEST_F(TrainedRun, RenderWritesEighteenScaledImages) {
  const auto files = cmd_render(output_.checkpoints[2], config_.dataset, 0, dir_.path() / "render");
  EXPECT_EQ(files.size(), 18u);
  for (const auto& f : files) {
    EXPECT_TRUE(fs::exists(f));
    EXPECT_NE(f.filename().string().find("_scale"), std::string::npos);
  }
  EXPECT_THROW(cmd_render(output_.checkpoints[2], config_.dataset, 999, dir_.path() / "r2"), std::invalid_argument);
}

TEST_F(TrainedRun, ZeroDensityRendersBlack) {
  Checkpoint c = load_checkpoint(output_.checkpoints[2]);
  for (auto& [name, t] : c.tensors) {
    if (name.rfind("param/svcc/decoder.", 0) != 0) continue;
    const bool last_bias = name.find("dconv4.bias") != std::string::npos;
    for (auto& v : t.values()) v = last_bias ? -1000.f : 0.f;
  }
  const fs::path ck = dir_.path() / "zero.ckpt";
  save_checkpoint(ck, c);
  int densities = 0;
  for (const auto& f : cmd_render(ck, config_.dataset, 0, dir_.path() / "zero")) {
    const std::string name = f.filename().string();
    if (name.find("_density_") == std::string::npos) continue;
    ++densities;
    EXPECT_NE(name.find("_scale0.png"), std::string::npos) << name;
    const auto img = scenesim::read_png8(f);
    for (float v : img.values()) EXPECT_EQ(v, 0.f);
  }
  EXPECT_EQ(densities, 3);
}

TEST(Render, SingleViewWeightsAreWhite) {
  TempDir dir;
  RunConfig c = tiny_run(dir.path(), 1);
  std::ostringstream log;
  cmd_gen(c, c.dataset, false, log);
  const auto out = cmd_train(c, "all", log);
  const auto files = cmd_render(out.checkpoints.back(), c.dataset, 0, dir.path() / "r");
  EXPECT_EQ(files.size(), 4u);
  bool found = false;
  for (const auto& f : files) {
    if (f.filename().string().find("_weight_scale1.png") == std::string::npos) continue;
    found = true;
    const auto img = scenesim::read_png8(f);
    for (float v : img.values()) EXPECT_EQ(v, 255.f);
  }
  EXPECT_TRUE(found);
}

TEST(Gradcheck, AllComponentsPass) {
  for (const auto& name : gradcheck_components()) {
    const auto r = run_gradcheck(name);
    EXPECT_TRUE(r.passed) << name << " " << r.max_relative_error << " " << r.detail;
    EXPECT_EQ(r.accepted, 5) << name;
  }
}

TEST(Gradcheck, KinkPointIsRejectedAndResampled) {
  GradcheckOptions opt;
  opt.inject_kink = true;
  const auto r = run_gradcheck("loss_weak", opt);
  EXPECT_GE(r.rejected, 1);
  EXPECT_TRUE(r.points.front().rejected);
  EXPECT_EQ(r.accepted, 5);
  EXPECT_TRUE(r.passed);
}

TEST(Gradcheck, UnknownComponentListsValidNames) {
  try {
    run_gradcheck("nope");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("compute_weights"), std::string::npos);
  }
}

}  // namespace
}  // namespace wscf::cli
