#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include "gtest/gtest.h"
#include "wscf/geometry/warp.hpp"
#include "wscf/scenesim/dataset_io.hpp"
#include "wscf/scenesim/supervision.hpp"

namespace wscf::scenesim {
namespace {

namespace fs = std::filesystem;

SceneConfig small_config(int views = 3, int frames = 6) {
  SceneConfig c;
  c.views = views;
  c.train_frames = frames;
  c.test_frames = 2;
  return c;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("wscf_scenesim_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Camera, OpticalAxisProjectsToCentre) {
  auto cams = make_layout("arc", 3, 64, 64, 60);
  for (const auto& cam : cams) {
    const double d = 9.0;
    const auto f = cam.forward();
    auto p = project(cam, {cam.position[0] + d * f[0], cam.position[1] + d * f[1], cam.position[2] + d * f[2]});
    ASSERT_TRUE(p);
    EXPECT_NEAR(p->x, 31.5, 1e-9);
    EXPECT_NEAR(p->y, 31.5, 1e-9);
    EXPECT_NEAR(p->depth, d, 1e-9);
  }
}

TEST(Camera, MirroredCamerasGiveMirroredHeads) {
  // cameras mirrored through the x axis, looking at the origin
  CameraSpec a, b;
  a.position = {-10, 3, 5};
  b.position = {-10, -3, 5};
  a.yaw = std::atan2(-3.0, 10.0);
  b.yaw = -a.yaw;
  a.pitch = b.pitch = std::atan2(5.0, std::hypot(10.0, 3.0));
  for (double py : {0.0, 0.8}) {
    auto pa = project(a, {1.0, py, 1.7});
    auto pb = project(b, {1.0, -py, 1.7});
    ASSERT_TRUE(pa && pb);
    // mirroring the world flips image columns about the principal point
    EXPECT_NEAR(pa->x, 63.0 - pb->x, 1e-9);
    EXPECT_NEAR(pa->y, pb->y, 1e-9);
  }
}

TEST(Render, EmptySceneIsBlankWithoutBackground) {
  SceneConfig c;
  c.background_level = 0;
  c.noise_std = 0;
  auto cam = make_layout("arc", 1, 64, 64, 60)[0];
  ViewData v = render_view(cam, {}, c, 1);
  EXPECT_TRUE(v.heads.empty());
  for (float x : v.image.values()) EXPECT_EQ(x, 0.0f);
}

TEST(Render, BlobsHaveUnitMassAndOcclusionSuppresses) {
  SceneConfig c;
  c.background_level = 0;
  c.noise_std = 0;
  c.png_scale = 1e-5;
  auto cam = make_layout("arc", 1, 64, 64, 60)[0];
  // two people one behind the other along the camera's line of sight
  std::vector<GroundPoint> people = {{0, 0.0, 0.0}, {1, 0.4, 0.0}, {2, 0.0, 3.0}};
  ViewData v = render_view(cam, people, c, 1);
  std::set<int> ids;
  for (const auto& h : v.heads) ids.insert(h.person_id);
  EXPECT_EQ(ids, (std::set<int>{0, 2}));
  EXPECT_NEAR(v.image.sum(), 2.0, 1e-3);
  for (std::size_t i = 0; i + 1 < v.heads.size(); ++i)
    for (std::size_t j = i + 1; j < v.heads.size(); ++j)
      EXPECT_GE(std::hypot(v.heads[i].x - v.heads[j].x, v.heads[i].y - v.heads[j].y), c.occlusion_radius_px);
}

TEST(Render, DistanceMapIncreasesUpTheImage) {
  auto cam = make_layout("arc", 1, 64, 64, 60)[0];
  ViewData v = render_view(cam, {}, SceneConfig{}, 1);
  EXPECT_GT(v.distance.at(30, 32), v.distance.at(63, 32));
  EXPECT_LE(v.distance.at(0, 32), 50.0f);
  // bottom-centre pixel: ray hits the ground at |camera - hit|
  const Vec3 ray = pixel_ray(cam, 32, 63);
  const double t = -cam.position[2] / ray[2];
  EXPECT_NEAR(v.distance.at(63, 32), t * std::sqrt(ray[0] * ray[0] + ray[1] * ray[1] + ray[2] * ray[2]), 1e-4);
}

TEST(Generate, FrameInvariants) {
  Dataset ds = generate_scene(small_config());
  for (const auto& f : ds.train) {
    std::set<int> ids;
    int total = 0;
    for (const auto& v : f.views) {
      total += v.count();
      for (const auto& h : v.heads) ids.insert(h.person_id);
      const auto d = gt_density_map(v.heads, 1.0, 16, 16);
      EXPECT_NEAR(d.sum(), v.count(), 1e-3);
    }
    EXPECT_EQ(f.scene_count, static_cast<int>(ids.size()));
    EXPECT_LE(f.scene_count, total);
  }
}

TEST(Generate, SingleViewSceneCountEqualsViewCount) {
  Dataset ds = generate_scene(small_config(1));
  for (const auto& f : ds.train) EXPECT_EQ(f.scene_count, f.views[0].count());
  EXPECT_FALSE(ds.manifest.warnings.empty());
}

TEST(Generate, ArcLayoutOverlaps) {
  SceneConfig c = small_config(3, 30);
  c.min_people = c.max_people = 30;
  Dataset ds = generate_scene(c);
  double factor = 0;
  for (const auto& f : ds.train) {
    int total = 0;
    for (const auto& v : f.views) total += v.count();
    factor += static_cast<double>(total) / f.scene_count;
  }
  EXPECT_GT(factor / ds.train.size(), 1.2);
  EXPECT_TRUE(ds.manifest.warnings.empty());
}

TEST(Generate, DisjointLayoutWarns) {
  SceneConfig c = small_config(2, 6);
  c.layout = "disjoint";
  Dataset ds = generate_scene(c);
  ASSERT_EQ(ds.manifest.warnings.size(), 1u);
  for (const auto& f : ds.train) {
    EXPECT_TRUE(geometry::is_dummy(gt_homography(f, 0, 1)));
    EXPECT_EQ(gt_match_map(f, 0, 1, 2, 16, 16).sum(), 0.0);
  }
}

TEST(Generate, CrowdIndependentOfViewCount) {
  Dataset three = generate_scene(small_config(3));
  Dataset four = generate_scene(small_config(4));
  for (std::size_t k = 0; k < three.train.size(); ++k)
    for (int v = 0; v < 3; ++v)
      EXPECT_EQ(three.train[k].views[v].image.storage(), four.train[k].views[v].image.storage());
}

TEST(GtHomography, SelfIsIdentity) {
  Dataset ds = generate_scene(small_config());
  auto h = gt_homography(ds.train[0], 1, 1);
  for (int i = 0; i < 9; ++i) EXPECT_NEAR(h.matrix()[i], geometry::Homography::identity().matrix()[i], 1e-6);
}

TEST(GtHomography, ReprojectsCovisibleHeads) {
  Dataset ds = generate_scene(small_config());
  for (const auto& f : ds.train) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const auto h = gt_homography(f, i, j);
        ASSERT_FALSE(geometry::is_dummy(h));
        const auto hinv = h.inverse();
        for (int id : covisible_ids(f, i, j)) {
          auto find = [&](int v) {
            for (const auto& hp : f.views[v].heads)
              if (hp.person_id == id) return hp;
            return HeadPoint{};
          };
          const HeadPoint a = find(i), b = find(j);
          // view-j head carried into view i
          auto p = geometry::apply_homography(hinv, geometry::normalize_coords({b.x, b.y}, 64, 64));
          auto px = geometry::denormalize_coords(p.point, 64, 64);
          EXPECT_LT(std::hypot(px.x - a.x, px.y - a.y), 2.0);
        }
      }
    }
  }
}

TEST(GtHomography, WarpedDensityLandsOnViewIHeads) {
  Dataset ds = generate_scene(small_config());
  const auto& f = ds.train[0];
  // a single co-visible person rendered as a density in view 1, warped into view 0
  const int id = covisible_ids(f, 0, 1).front();
  HeadPoint a{}, b{};
  for (const auto& hp : f.views[0].heads)
    if (hp.person_id == id) a = hp;
  for (const auto& hp : f.views[1].heads)
    if (hp.person_id == id) b = hp;
  Tensor<double> d = gt_density_map({b}, 1.0, 16, 16).cast<double>();
  Tensor<double> w = geometry::warp_features(constant(d), gt_homography(f, 0, 1)).value();
  double mx = 0, my = 0, mass = w.sum();
  ASSERT_GT(mass, 0.1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      mx += x * w.at(y, x);
      my += y * w.at(y, x);
    }
  EXPECT_LT(std::hypot(mx / mass - (a.x - 1.5) / 4, my / mass - (a.y - 1.5) / 4), 1.0);
}

TEST(GtMatchMap, DiskRasterization) {
  MultiViewFrame f;
  f.views.resize(2);
  for (auto& v : f.views) v.image = Tensor<float>({64, 64});
  f.views[0].heads = {{5, 4 * 8 + 1.5, 4 * 7 + 1.5}, {6, 10, 10}};
  f.views[1].heads = {{5, 20, 20}};
  auto m = gt_match_map(f, 0, 1, 2, 16, 16);
  int expected = 0;
  for (int y = -2; y <= 2; ++y)
    for (int x = -2; x <= 2; ++x) expected += x * x + y * y <= 4;
  EXPECT_EQ(m.sum(), expected);
  EXPECT_EQ(m.at(7, 8), 1.0f);
  EXPECT_EQ(m.at(7, 11), 0.0f);
  f.views[1].heads.clear();
  EXPECT_EQ(gt_match_map(f, 0, 1, 2, 16, 16).sum(), 0.0);
  EXPECT_THROW(gt_match_map(f, 0, 1, 0.5, 16, 16), std::invalid_argument);
}

TEST(GtDensityMap, MassEqualsHeadCount) {
  EXPECT_EQ(gt_density_map({}, 1.0, 16, 16).sum(), 0.0);
  EXPECT_NEAR(gt_density_map({{0, 0.0, 63.0}}, 2.5, 16, 16).sum(), 1.0, 1e-5);
  std::vector<HeadPoint> heads;
  for (int k = 0; k < 17; ++k) heads.push_back({k, 3.7 * k + 1.0, 63.0 - 3.1 * k});
  EXPECT_NEAR(gt_density_map(heads, 1.0, 16, 16).sum(), 17.0, 1e-3);
  EXPECT_THROW(gt_density_map(heads, 0.0, 16, 16), std::invalid_argument);
}

TEST(DatasetIo, RoundTripAndDeterminism) {
  const fs::path a = temp_dir("a"), b = temp_dir("b");
  Dataset ds = generate_scene(small_config());
  write_dataset(ds, a);
  write_dataset(generate_scene(small_config()), b);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }

  Dataset back = read_dataset(a);
  ASSERT_EQ(back.train.size(), ds.train.size());
  ASSERT_EQ(back.test.size(), ds.test.size());
  EXPECT_EQ(back.manifest.views, 3);
  EXPECT_EQ(back.manifest.frames.size(), ds.manifest.frames.size());
  for (std::size_t k = 0; k < ds.train.size(); ++k) {
    const auto& x = ds.train[k];
    const auto& y = back.train[k];
    EXPECT_EQ(x.scene_count, y.scene_count);
    for (int v = 0; v < 3; ++v) {
      EXPECT_EQ(x.views[v].image.storage(), y.views[v].image.storage());
      EXPECT_EQ(x.views[v].distance.storage(), y.views[v].distance.storage());
      ASSERT_EQ(x.views[v].heads.size(), y.views[v].heads.size());
      for (std::size_t h = 0; h < x.views[v].heads.size(); ++h) {
        EXPECT_EQ(x.views[v].heads[h].person_id, y.views[v].heads[h].person_id);
        EXPECT_EQ(x.views[v].heads[h].x, y.views[v].heads[h].x);
        EXPECT_EQ(x.views[v].heads[h].y, y.views[v].heads[h].y);
      }
    }
  }
  fs::remove_all(b);

  fs::remove(a / "frame_1" / "view_2.png");
  try {
    read_dataset(a);
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_EQ(e.path().filename(), "view_2.png");
  }
  { std::ofstream(a / "frame_0" / "view_0_distance.bin", std::ios::binary) << "JUNK"; }
  EXPECT_THROW(read_distance_map(a / "frame_0" / "view_0_distance.bin"), DatasetError);
  fs::remove_all(a);
}

TEST(SceneConfigJson, RoundTripAndUnknownKeys) {
  SceneConfig c;
  c.views = 4;
  c.seed = 99;
  SceneConfig back = scene_config_from_json(to_json(c));
  EXPECT_EQ(back.views, 4);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_THROW(scene_config_from_json({{"viewz", 3}}), std::invalid_argument);
}

TEST(Supervision, AccessesAreAttributedToPaths) {
  Dataset ds = generate_scene(small_config());
  AccessLog log;
  AnnotationReader reader(ds.train, {}, &log);
  {
    AccessScope scope(kSvccLossPath);
    EXPECT_EQ(reader.view_count(0, 0), ds.train[0].views[0].count());
    reader.homography(0, 0, 1);
    reader.match_map(0, 0, 1);
  }
  EXPECT_EQ(log.count(kSvccLossPath, AnnotationField::kViewCount), 1u);
  EXPECT_EQ(log.count(kSvccLossPath, AnnotationField::kHeadPoints), 0u);
  EXPECT_EQ(log.count(kHomographyGtPath, AnnotationField::kHeadPoints), 1u);
  EXPECT_EQ(log.count(kMatchGtPath, AnnotationField::kHeadPoints), 1u);
  {
    AccessScope scope(kSvccLossPath);
    reader.density_map(0, 0);
  }
  EXPECT_EQ(log.count(kSvccLossPath, AnnotationField::kDensityMap), 1u);
  EXPECT_EQ(reader.scene_count(0, {0, 1, 2}), ds.train[0].scene_count);
}

}  // namespace
}  // namespace wscf::scenesim
