#include "wscf/scenesim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>


namespace wscf::scenesim {

namespace {

using Rng = std::mt19937_64;

Rng frame_rng(std::uint64_t seed, int stream, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

// Static ground pattern, so every camera sees a fixed, position-dependent backdrop.
double ground_texture(double gx, double gy, double level) {
  constexpr double tau = 2 * std::numbers::pi;
  const double a = std::sin(tau * (0.13 * gx + 0.05 * gy) + 0.3) * std::cos(tau * (-0.04 * gx + 0.11 * gy));
  const double b = std::sin(tau * (0.07 * gx - 0.09 * gy) + 1.1);
  return level * (1.0 + 0.6 * a + 0.4 * b);
}

std::vector<GroundPoint> sample_people(const SceneConfig& config, Rng& rng) {
  std::uniform_int_distribution<int> count(config.min_people, config.max_people);
  std::uniform_real_distribution<double> pos(-config.extent, config.extent);
  std::vector<GroundPoint> people(count(rng));
  for (std::size_t k = 0; k < people.size(); ++k) {
    people[k].person_id = static_cast<int>(k);
    people[k].x = pos(rng);
    people[k].y = pos(rng);
  }
  return people;
}

void validate(const SceneConfig& c) {
  if (c.views < 1) throw std::invalid_argument("scene config: views must be >= 1");
  if (c.width % 4 || c.height % 4 || c.width < 8 || c.height < 8) {
    throw std::invalid_argument("scene config: image size must be a multiple of 4 and at least 8");
  }
  if (c.min_people < 1 || c.max_people < c.min_people) {
    throw std::invalid_argument("scene config: person count range must be positive");
  }
  if (c.train_frames < 0 || c.test_frames < 0) throw std::invalid_argument("scene config: negative frame count");
  if (c.png_scale <= 0) throw std::invalid_argument("scene config: png_scale must be positive");
}

}  // namespace

float quantize_intensity(double v, double png_scale) {
  const double q = std::clamp(std::round(v / png_scale), 0.0, 65535.0);
  return static_cast<float>(q * png_scale);
}

ViewData render_view(const CameraSpec& camera, const std::vector<GroundPoint>& people,
                     const SceneConfig& config, std::uint64_t noise_seed) {
  const int w = camera.width, h = camera.height;
  ViewData view;
  view.image = Tensor<float>({h, w});
  view.distance = Tensor<float>({h, w});

  struct Candidate {
    HeadPoint head;
    double depth;
  };
  std::vector<Candidate> candidates;
  for (const auto& p : people) {
    auto proj = project(camera, {p.x, p.y, config.head_height});
    if (!proj || proj->x < 0 || proj->y < 0 || proj->x > w - 1 || proj->y > h - 1) continue;
    candidates.push_back({{p.person_id, proj->x, proj->y}, proj->depth});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.head.person_id < b.head.person_id;
  });
  std::vector<double> depths;
  for (const auto& c : candidates) {
    const bool hidden = std::any_of(view.heads.begin(), view.heads.end(), [&](const HeadPoint& k) {
      return std::hypot(k.x - c.head.x, k.y - c.head.y) < config.occlusion_radius_px;
    });
    if (hidden) continue;
    view.heads.push_back(c.head);
    depths.push_back(c.depth);
  }

  std::vector<double> img(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec3 ray = pixel_ray(camera, x, y);
      double dist = config.far_plane;
      double bg = 0.5 * config.background_level;
      if (ray[2] < 0) {
        const double t = -camera.position[2] / ray[2];
        const double norm = std::sqrt(ray[0] * ray[0] + ray[1] * ray[1] + ray[2] * ray[2]);
        dist = std::min(t * norm, config.far_plane);
        bg = ground_texture(camera.position[0] + t * ray[0], camera.position[1] + t * ray[1],
                            config.background_level);
      }
      view.distance.at(y, x) = static_cast<float>(dist);
      img[static_cast<std::size_t>(y) * w + x] = bg;
    }
  }

  for (std::size_t k = 0; k < view.heads.size(); ++k) {
    const auto& hp = view.heads[k];
    const double sigma = std::clamp(config.blob_sigma_m * camera.focal / depths[k],
                                    config.blob_sigma_min_px, config.blob_sigma_max_px);
    const int r = static_cast<int>(std::ceil(3 * sigma));
    const int x0 = std::max(0, static_cast<int>(std::floor(hp.x)) - r);
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(hp.x)) + r);
    const int y0 = std::max(0, static_cast<int>(std::floor(hp.y)) - r);
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(hp.y)) + r);
    std::vector<double> kernel;
    double mass = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - hp.x) * (x - hp.x) + (y - hp.y) * (y - hp.y);
        const double v = d2 <= 9 * sigma * sigma ? std::exp(-d2 / (2 * sigma * sigma)) : 0.0;
        kernel.push_back(v);
        mass += v;
      }
    }
    std::size_t idx = 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) img[static_cast<std::size_t>(y) * w + x] += kernel[idx++] / mass;
  }

  Rng rng(noise_seed);
  std::normal_distribution<double> noise(0.0, config.noise_std);
  for (std::size_t i = 0; i < img.size(); ++i) {
    view.image[i] = quantize_intensity(img[i] + (config.noise_std > 0 ? noise(rng) : 0.0), config.png_scale);
  }
  return view;
}

std::vector<int> covisible_ids(const MultiViewFrame& frame, int i, int j) {
  std::set<int> in_i;
  for (const auto& hp : frame.views.at(i).heads) in_i.insert(hp.person_id);
  std::vector<int> out;
  for (const auto& hp : frame.views.at(j).heads)
    if (in_i.count(hp.person_id)) out.push_back(hp.person_id);
  std::sort(out.begin(), out.end());
  return out;
}

Dataset generate_scene(const SceneConfig& config) {
  validate(config);
  const auto cams = make_layout(config.layout, config.views, config.width, config.height, config.fov_degrees);
  Dataset ds;
  auto& m = ds.manifest;
  m.views = config.views;
  m.width = config.width;
  m.height = config.height;
  m.seed = config.seed;
  m.png_scale = config.png_scale;
  m.layout = config.layout;

  int starved = 0;
  double overlap_sum = 0;
  int overlap_frames = 0;
  const int total = config.train_frames + config.test_frames;
  for (int k = 0; k < total; ++k) {
    const bool train = k < config.train_frames;
    Rng rng = frame_rng(config.seed, 0, k);
    const auto people = sample_people(config, rng);
    MultiViewFrame frame;
    frame.frame_id = k;
    std::set<int> seen;
    int view_sum = 0;
    for (int v = 0; v < config.views; ++v) {
      Rng noise_rng = frame_rng(config.seed, 1 + v, k);
      frame.views.push_back(render_view(cams[v], people, config, noise_rng()));
      for (const auto& hp : frame.views.back().heads) seen.insert(hp.person_id);
      view_sum += frame.views.back().count();
    }
    frame.scene_count = static_cast<int>(seen.size());
    if (frame.scene_count > 0) {
      overlap_sum += static_cast<double>(view_sum) / frame.scene_count;
      ++overlap_frames;
    }
    bool any_shared = false;
    for (int i = 0; i < config.views && !any_shared; ++i)
      for (int j = i + 1; j < config.views && !any_shared; ++j) any_shared = !covisible_ids(frame, i, j).empty();
    if (config.views > 1 && !any_shared) ++starved;

    std::ostringstream name;
    name << "frame_" << k;
    m.frames.push_back({k, name.str(), train ? "train" : "test"});
    (train ? ds.train : ds.test).push_back(std::move(frame));
  }
  m.overlap_factor = overlap_frames ? overlap_sum / overlap_frames : 0.0;
  if (config.views == 1) m.warnings.push_back("single view: fusion stages untrainable");
  if (config.views > 1 && total > 0 && 2 * starved > total) {
    m.warnings.push_back("more than 50% of frames have no co-visible people in any view pair; "
                         "matching supervision would be starved");
  }
  return ds;
}

geometry::Homography gt_homography(const MultiViewFrame& frame, int i, int j) {
  if (i == j) return geometry::Homography::identity();
  const auto& vi = frame.views.at(i);
  const auto& vj = frame.views.at(j);
  const int w = vi.image.dim(1), h = vi.image.dim(0);
  std::vector<geometry::Correspondence> pairs;
  for (const auto& a : vi.heads) {
    for (const auto& b : vj.heads) {
      if (a.person_id != b.person_id) continue;
      pairs.push_back({geometry::normalize_coords({a.x, a.y}, w, h),
                       geometry::normalize_coords({b.x, b.y}, w, h), a.person_id});
    }
  }
  if (pairs.size() < 4) return geometry::make_dummy();
  return geometry::fit_homography_dlt(pairs);
}

Tensor<float> gt_match_map(const MultiViewFrame& frame, int i, int j, double radius, int h, int w) {
  if (radius < 1) throw std::invalid_argument("gt_match_map: radius must be at least one cell");
  Tensor<float> map({h, w});
  const auto shared = covisible_ids(frame, i, j);
  const int stride = frame.views.at(i).image.dim(1) / w;
  for (const auto& hp : frame.views.at(i).heads) {
    if (!std::binary_search(shared.begin(), shared.end(), hp.person_id)) continue;
    const double cx = (hp.x - 0.5 * (stride - 1)) / stride;
    const double cy = (hp.y - 0.5 * (stride - 1)) / stride;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) map.at(y, x) = 1.0f;
  }
  return map;
}

Tensor<float> gt_density_map(const std::vector<HeadPoint>& heads, double sigma, int h, int w, int stride) {
  if (sigma <= 0) throw std::invalid_argument("gt_density_map: sigma must be positive");
  std::vector<double> acc(static_cast<std::size_t>(h) * w, 0.0);
  std::vector<double> kernel;
  for (const auto& hp : heads) {
    const double cx = (hp.x - 0.5 * (stride - 1)) / stride;
    const double cy = (hp.y - 0.5 * (stride - 1)) / stride;
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - 3 * sigma)));
    const int x1 = std::min(w - 1, static_cast<int>(std::floor(cx + 3 * sigma)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - 3 * sigma)));
    const int y1 = std::min(h - 1, static_cast<int>(std::floor(cy + 3 * sigma)));
    kernel.clear();
    double mass = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double v = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma));
        kernel.push_back(v);
        mass += v;
      }
    }
    if (mass <= 0) {  // head further than 3 sigma outside the grid: put it on the nearest cell
      const int x = std::clamp(static_cast<int>(std::lround(cx)), 0, w - 1);
      const int y = std::clamp(static_cast<int>(std::lround(cy)), 0, h - 1);
      acc[static_cast<std::size_t>(y) * w + x] += 1.0;
      continue;
    }
    std::size_t idx = 0;
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) acc[static_cast<std::size_t>(y) * w + x] += kernel[idx++] / mass;
  }
  Tensor<float> map({h, w});
  for (std::size_t i = 0; i < acc.size(); ++i) map[i] = static_cast<float>(acc[i]);
  return map;
}

}  // namespace wscf::scenesim
