#include "wscf/scenesim/supervision.hpp"

#include <set>

namespace wscf::scenesim {

namespace {
thread_local std::string current_path = "unscoped";
}

std::string to_string(AnnotationField f) {
  switch (f) {
    case AnnotationField::kViewCount: return "view_count";
    case AnnotationField::kSceneCount: return "scene_count";
    case AnnotationField::kHeadPoints: return "head_points";
    case AnnotationField::kDensityMap: return "density_map";
    case AnnotationField::kHomography: return "homography";
    case AnnotationField::kMatchMap: return "match_map";
  }
  return "unknown";
}

void AccessLog::record(const std::string& path, AnnotationField field) {
  std::lock_guard lock(mu_);
  ++counts_[{path, field}];
}

std::size_t AccessLog::count(const std::string& path, AnnotationField field) const {
  std::lock_guard lock(mu_);
  auto it = counts_.find({path, field});
  return it == counts_.end() ? 0 : it->second;
}

std::map<std::pair<std::string, AnnotationField>, std::size_t> AccessLog::snapshot() const {
  std::lock_guard lock(mu_);
  return counts_;
}

void AccessLog::clear() {
  std::lock_guard lock(mu_);
  counts_.clear();
}

AccessScope::AccessScope(std::string path) : previous_(std::exchange(current_path, std::move(path))) {}
AccessScope::~AccessScope() { current_path = std::move(previous_); }
const std::string& AccessScope::current() { return current_path; }

AnnotationReader::AnnotationReader(const std::vector<MultiViewFrame>& frames, AnnotationSettings settings,
                                   AccessLog* log)
    : frames_(&frames), settings_(settings), log_(log) {}

int AnnotationReader::views() const { return frames_->empty() ? 0 : frames_->front().view_count(); }

void AnnotationReader::note(AnnotationField f) const {
  if (log_) log_->record(AccessScope::current(), f);
}

const Tensor<float>& AnnotationReader::image(int frame, int view) const {
  return frames_->at(frame).views.at(view).image;
}

const Tensor<float>& AnnotationReader::distance(int frame, int view) const {
  return frames_->at(frame).views.at(view).distance;
}

int AnnotationReader::view_count(int frame, int view) const {
  note(AnnotationField::kViewCount);
  return frames_->at(frame).views.at(view).count();
}

int AnnotationReader::scene_count(int frame) const {
  note(AnnotationField::kSceneCount);
  return frames_->at(frame).scene_count;
}

int AnnotationReader::scene_count(int frame, const std::vector<int>& views) const {
  note(AnnotationField::kSceneCount);
  std::set<int> ids;
  for (int v : views)
    for (const auto& hp : frames_->at(frame).views.at(v).heads) ids.insert(hp.person_id);
  return static_cast<int>(ids.size());
}

const std::vector<HeadPoint>& AnnotationReader::head_points(int frame, int view) const {
  note(AnnotationField::kHeadPoints);
  return frames_->at(frame).views.at(view).heads;
}

Tensor<float> AnnotationReader::density_map(int frame, int view) const {
  note(AnnotationField::kDensityMap);
  const auto& v = frames_->at(frame).views.at(view);
  AccessScope scope("density_gt");
  note(AnnotationField::kHeadPoints);
  return gt_density_map(v.heads, settings_.density_sigma, v.image.dim(0) / settings_.stride,
                        v.image.dim(1) / settings_.stride, settings_.stride);
}

geometry::Homography AnnotationReader::homography(int frame, int i, int j) const {
  note(AnnotationField::kHomography);
  AccessScope scope(kHomographyGtPath);
  note(AnnotationField::kHeadPoints);
  return gt_homography(frames_->at(frame), i, j);
}

Tensor<float> AnnotationReader::match_map(int frame, int i, int j) const {
  note(AnnotationField::kMatchMap);
  const auto& f = frames_->at(frame);
  AccessScope scope(kMatchGtPath);
  note(AnnotationField::kHeadPoints);
  return gt_match_map(f, i, j, settings_.match_radius, f.views.at(i).image.dim(0) / settings_.stride,
                      f.views.at(i).image.dim(1) / settings_.stride);
}

}  // namespace wscf::scenesim
