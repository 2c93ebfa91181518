#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "wscf/scenesim/scene.hpp"

namespace wscf::scenesim {

/// Missing or malformed dataset file; `path` names the offending file.
class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Layout:
///   manifest.json
///   frame_<k>/view_<i>.png            16-bit grayscale, value * png_scale = intensity
///   frame_<k>/view_<i>_distance.bin   "WSCF", u16 h, u16 w, then h*w float32 (LE)
///   frame_<k>/annotations.json        {"scene_count", "views": [{"count", "heads"}]}
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

void write_png16(const std::filesystem::path& path, const Tensor<float>& image, double scale);
Tensor<float> read_png16(const std::filesystem::path& path, double scale);
/// 8-bit grayscale, values already in [0, 255].
void write_png8(const std::filesystem::path& path, const Tensor<float>& image);
Tensor<float> read_png8(const std::filesystem::path& path);  // raw 0..255

void write_distance_map(const std::filesystem::path& path, const Tensor<float>& map);
Tensor<float> read_distance_map(const std::filesystem::path& path);

nlohmann::json to_json(const SceneConfig& config);
/// Keys absent from `j` keep their defaults; unknown keys are rejected.
SceneConfig scene_config_from_json(const nlohmann::json& j);

}  // namespace wscf::scenesim
