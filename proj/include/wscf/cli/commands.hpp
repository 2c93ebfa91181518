#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "wscf/cli/checkpoint.hpp"
#include "wscf/cli/run_config.hpp"
#include "wscf/mvce/evaluate.hpp"
#include "wscf/scenesim/supervision.hpp"

namespace wscf::cli {

namespace fs = std::filesystem;

/// Generates the dataset described by config.scene into `out`. Refuses a
/// non-empty directory unless `force`.
scenesim::DatasetManifest cmd_gen(const RunConfig& config, const fs::path& out, bool force, std::ostream& log);

fs::path checkpoint_path(const fs::path& run_dir, mvce::Stage stage);
fs::path loss_curve_path(const fs::path& run_dir, mvce::Stage stage);

struct TrainOutput {
  std::vector<fs::path> checkpoints;
  std::vector<mvce::EpochLoss> curve;
};

/// Trains `stage` ("svcc", "homography", "fusion" or "all") on the dataset's
/// training split, writing <stage>.ckpt and loss_<stage>.csv under run_dir.
/// Later stages restore earlier checkpoints and throw MissingPrerequisite
/// naming any that are absent. Weak-mode runs are audited through `audit`
/// (a private log is used when null) and throw if the SVCC loss path read
/// head locations or density maps.
TrainOutput cmd_train(const RunConfig& config, const std::string& stage, std::ostream& log,
                      scenesim::AccessLog* audit = nullptr);

/// Rebuilds the model a checkpoint describes and restores every completed stage.
std::unique_ptr<mvce::MultiViewCounter> load_model(const Checkpoint& checkpoint);

struct EvalOptions {
  std::vector<int> views;  // empty: every view in the dataset
  mvce::Pipeline pipeline = mvce::Pipeline::kModel;
  bool ablate_distance = false;
  bool ablate_match_supervision = false;
  std::string split = "test";
};

/// Evaluates a checkpoint on a dataset split; writes the CSV to `out` when non-empty.
mvce::EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& dataset, const EvalOptions& options,
                          const fs::path& out, std::ostream& log);

/// Per-view input, D, C and W images plus one M image per ordered pair, each
/// scaled by its own maximum; the maximum is part of the file name.
std::vector<fs::path> cmd_render(const fs::path& checkpoint, const fs::path& dataset, int frame_id,
                                 const fs::path& out_dir);

void write_loss_curve(const fs::path& path, const std::vector<mvce::EpochLoss>& curve);

}  // namespace wscf::cli
