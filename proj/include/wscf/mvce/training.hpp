#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wscf/mvce/fusion.hpp"
#include "wscf/mvce/model.hpp"
#include "wscf/substrate/adam.hpp"

namespace wscf::mvce {

enum class Supervision { kFull, kWeak };
enum class Stage { kSvcc, kHomography, kFusion };

std::string to_string(Supervision s);
std::string to_string(Stage s);
Supervision supervision_from_string(const std::string& s);
Stage stage_from_string(const std::string& s);

struct StageSchedule {
  int epochs = 15;
  double learning_rate = 1e-3;
};

struct TrainConfig {
  Supervision supervision = Supervision::kWeak;
  LossWeights weights;
  StageSchedule svcc;
  StageSchedule homography;
  StageSchedule fusion;
  std::uint64_t seed = 7;
  bool use_match_supervision = true;
  double ranking_weight = 10.0;
  int nested_crops = 3;  // regions per chain, one chain per view
  scenesim::AnnotationSettings annotations;
};

struct EpochLoss {
  Stage stage = Stage::kSvcc;
  int epoch = 0;
  double total = 0;  // mean over frames of the optimized objective
  double l_s = 0;
  double l_di = 0;
  double l_d = 0;
  double l_h = 0;
};

class MissingPrerequisite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the three stages on the training frames. Stage-1 modules are frozen
/// in stage 2; stage 2 refuses to start until both stage-1 stages are marked
/// complete, by training or by restoring a checkpoint.
class StagedTrainer {
 public:
  StagedTrainer(MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames,
                const TrainConfig& config, scenesim::AccessLog* log = nullptr);

  std::vector<EpochLoss> train_svcc();
  std::vector<EpochLoss> train_homography();
  std::vector<EpochLoss> train_fusion();
  std::vector<EpochLoss> run(Stage stage);

  bool completed(Stage s) const { return done_[static_cast<int>(s)]; }
  void mark_completed(Stage s) { done_[static_cast<int>(s)] = true; }
  OptimizerState<float>& optimizer(Stage s) { return optimizers_[static_cast<int>(s)]; }

 private:
  Var<float> svcc_loss(const Var<float>& density, int frame, Rng& rng) const;
  std::vector<int> epoch_order(Stage stage, int epoch) const;

  MultiViewCounter& model_;
  scenesim::AnnotationReader reader_;
  TrainConfig config_;
  std::vector<int> all_views_;
  bool done_[3] = {false, false, false};
  OptimizerState<float> optimizers_[3];
};

using StageCallback = std::function<void(Stage, StagedTrainer&, const std::vector<EpochLoss>&)>;

/// svcc -> homography -> fusion, calling `after_stage` when each finishes.
std::vector<EpochLoss> train_staged(MultiViewCounter& model, const std::vector<scenesim::MultiViewFrame>& frames,
                                    const TrainConfig& config, scenesim::AccessLog* log = nullptr,
                                    const StageCallback& after_stage = {});

}  // namespace wscf::mvce
