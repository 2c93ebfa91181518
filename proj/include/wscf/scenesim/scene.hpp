#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wscf/geometry/homography.hpp"
#include "wscf/scenesim/camera.hpp"
#include "wscf/substrate/tensor.hpp"

namespace wscf::scenesim {

struct SceneConfig {
  int views = 3;
  int width = 64;
  int height = 64;
  std::string layout = "arc";
  double fov_degrees = 60.0;
  double extent = 10.0;  // people stand in [-extent, extent]^2 metres
  int min_people = 20;
  int max_people = 40;
  double head_height = 1.7;
  double blob_sigma_m = 0.25;  // blob radius in metres, projected with depth
  double blob_sigma_min_px = 0.7;
  double blob_sigma_max_px = 2.5;
  double occlusion_radius_px = 3.0;
  double far_plane = 50.0;
  double background_level = 0.03;
  double noise_std = 0.003;
  double png_scale = 1.0 / 16384.0;  // intensity per 16-bit PNG step
  int train_frames = 200;
  int test_frames = 50;
  std::uint64_t seed = 7;
};

struct HeadPoint {
  int person_id = 0;
  double x = 0;  // pixels
  double y = 0;
};

struct ViewData {
  Tensor<float> image;     // [H, W]
  Tensor<float> distance;  // [H, W] metres
  std::vector<HeadPoint> heads;

  int count() const { return static_cast<int>(heads.size()); }
};

struct MultiViewFrame {
  int frame_id = 0;
  std::vector<ViewData> views;
  int scene_count = 0;

  int view_count() const { return static_cast<int>(views.size()); }
};

struct FrameRecord {
  int frame_id = 0;
  std::string path;   // relative to the dataset root
  std::string split;  // "train" or "test"
};

struct DatasetManifest {
  int views = 0;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  double png_scale = 0;
  std::string layout;
  std::vector<FrameRecord> frames;
  std::vector<std::string> warnings;
  double overlap_factor = 0;  // mean over frames of sum(c_i) / S
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<MultiViewFrame> train;
  std::vector<MultiViewFrame> test;
};

struct GroundPoint {
  int person_id = 0;
  double x = 0;
  double y = 0;
};

/// Image, visible heads and distance map of one camera.
ViewData render_view(const CameraSpec& camera, const std::vector<GroundPoint>& people,
                     const SceneConfig& config, std::uint64_t noise_seed);

/// Deterministic in `config.seed`. People are drawn before any camera is
/// touched, so layouts that differ only in view count share their crowds.
Dataset generate_scene(const SceneConfig& config);

/// Person ids visible in both views.
std::vector<int> covisible_ids(const MultiViewFrame& frame, int i, int j);

/// Least-squares DLT over every co-visible head, mapping view-i normalized
/// coordinates to view j; the dummy when fewer than four heads are shared.
geometry::Homography gt_homography(const MultiViewFrame& frame, int i, int j);

/// Binary [h, w] map: 1 within `radius` cells of a view-i head that view j also sees.
Tensor<float> gt_match_map(const MultiViewFrame& frame, int i, int j, double radius, int h, int w);

/// Sum of per-head Gaussians truncated at 3 sigma and renormalized to unit mass
/// on a stride-`stride` grid of size [h, w].
Tensor<float> gt_density_map(const std::vector<HeadPoint>& heads, double sigma, int h, int w,
                             int stride = 4);

/// Quantizes like the PNG writer so in-memory frames equal reloaded ones.
float quantize_intensity(double v, double png_scale);

}  // namespace wscf::scenesim
