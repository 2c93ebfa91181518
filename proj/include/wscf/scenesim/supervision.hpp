#pragma once

#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "wscf/scenesim/scene.hpp"

namespace wscf::scenesim {

enum class AnnotationField { kViewCount, kSceneCount, kHeadPoints, kDensityMap, kHomography, kMatchMap };

std::string to_string(AnnotationField f);

/// Thread-safe tally of (code path, annotation field) reads.
class AccessLog {
 public:
  void record(const std::string& path, AnnotationField field);
  std::size_t count(const std::string& path, AnnotationField field) const;
  std::map<std::pair<std::string, AnnotationField>, std::size_t> snapshot() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, AnnotationField>, std::size_t> counts_;
};

/// Tags reads on this thread with `path` until destroyed.
class AccessScope {
 public:
  explicit AccessScope(std::string path);
  ~AccessScope();
  AccessScope(const AccessScope&) = delete;
  AccessScope& operator=(const AccessScope&) = delete;

  static const std::string& current();

 private:
  std::string previous_;
};

inline const std::string kSvccLossPath = "svcc_loss";
inline const std::string kHomographyGtPath = "homography_gt";
inline const std::string kMatchGtPath = "match_gt";

struct AnnotationSettings {
  double density_sigma = 1.0;  // feature cells
  double match_radius = 2.0;   // feature cells
  int stride = 4;
};

/// The only way trainers and evaluators reach ground truth. Every read goes
/// through the optional log; GT that is derived from head locations (the
/// homography and match maps) is attributed to its own construction path.
class AnnotationReader {
 public:
  AnnotationReader(const std::vector<MultiViewFrame>& frames, AnnotationSettings settings = {},
                   AccessLog* log = nullptr);

  int frame_count() const { return static_cast<int>(frames_->size()); }
  int views() const;
  int frame_id(int frame) const { return frames_->at(frame).frame_id; }

  // inputs, not supervision
  const Tensor<float>& image(int frame, int view) const;
  const Tensor<float>& distance(int frame, int view) const;

  int view_count(int frame, int view) const;
  int scene_count(int frame) const;
  /// Union of people seen by any view in `views`.
  int scene_count(int frame, const std::vector<int>& views) const;
  const std::vector<HeadPoint>& head_points(int frame, int view) const;
  Tensor<float> density_map(int frame, int view) const;
  geometry::Homography homography(int frame, int i, int j) const;
  Tensor<float> match_map(int frame, int i, int j) const;

  const AnnotationSettings& settings() const { return settings_; }

 private:
  void note(AnnotationField f) const;

  const std::vector<MultiViewFrame>* frames_;
  AnnotationSettings settings_;
  AccessLog* log_;
};

}  // namespace wscf::scenesim
