#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "wscf/mvce/training.hpp"
#include "wscf/scenesim/scene.hpp"

namespace wscf::cli {

struct RunConfig {
  std::string dataset = "data";  // dataset directory (written by gen, read by the rest)
  std::string run_dir = "run";   // checkpoints and loss curves
  std::string stage = "all";     // svcc | homography | fusion | all
  scenesim::SceneConfig scene;
  mvce::ModelConfig model;
  mvce::TrainConfig train;
};

/// Keys follow the struct fields, nested as scene / model.counting / model.mwe /
/// train.{weights,svcc,homography,fusion,annotations}.
nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys and invalid values throw.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
void validate(const RunConfig& config);

nlohmann::json to_json(const mvce::ModelConfig& config);
mvce::ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace wscf::cli
