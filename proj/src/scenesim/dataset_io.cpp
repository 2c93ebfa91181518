#include "wscf/scenesim/dataset_io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <set>

namespace wscf::scenesim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const fs::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw DatasetError(path, std::string("cannot open (") + std::strerror(errno) + ")");
  return f;
}

void write_png(const fs::path& path, int width, int height, int bit_depth,
               const std::vector<std::uint8_t>& bytes) {
  File f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw DatasetError(path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DatasetError(path, "PNG encoding failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row = static_cast<std::size_t>(width) * (bit_depth / 8);
  for (int y = 0; y < height; ++y) png_write_row(png, bytes.data() + y * row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(path, "missing file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DatasetError(path, std::string("invalid JSON: ") + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path, "cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

void write_png16(const fs::path& path, const Tensor<float>& image, double scale) {
  const int h = image.dim(0), w = image.dim(1);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto q = static_cast<std::uint16_t>(std::clamp(std::round(image[i] / scale), 0.0, 65535.0));
    bytes[2 * i] = static_cast<std::uint8_t>(q >> 8);  // PNG samples are big-endian
    bytes[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
  }
  write_png(path, w, h, 16, bytes);
}

void write_png8(const fs::path& path, const Tensor<float>& image) {
  const int h = image.dim(0), w = image.dim(1);
  std::vector<std::uint8_t> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::round(static_cast<double>(image[i])), 0.0, 255.0));
  write_png(path, w, h, 8, bytes);
}

namespace {

Tensor<float> read_gray_png(const fs::path& path, int depth, double scale) {
  File f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DatasetError(path, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DatasetError(path, "corrupt PNG");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_bit_depth(png, info) != depth || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DatasetError(path, "expected " + std::to_string(depth) + "-bit grayscale PNG");
  }
  const int bytes = depth / 8;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * bytes);
  Tensor<float> image({h, w});
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      const unsigned q = bytes == 2 ? (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1] : row[x];
      image.at(y, x) = static_cast<float>(q * scale);
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace

Tensor<float> read_png16(const fs::path& path, double scale) { return read_gray_png(path, 16, scale); }

Tensor<float> read_png8(const fs::path& path) { return read_gray_png(path, 8, 1.0); }

void write_distance_map(const fs::path& path, const Tensor<float>& map) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  const std::uint16_t h = static_cast<std::uint16_t>(map.dim(0)), w = static_cast<std::uint16_t>(map.dim(1));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(path, "cannot open for writing");
  out.write("WSCF", 4);
  out.write(reinterpret_cast<const char*>(&h), 2);
  out.write(reinterpret_cast<const char*>(&w), 2);
  out.write(reinterpret_cast<const char*>(map.data()), static_cast<std::streamsize>(map.size() * sizeof(float)));
}

Tensor<float> read_distance_map(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(path, "missing file");
  char magic[4];
  std::uint16_t h = 0, w = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), 2);
  in.read(reinterpret_cast<char*>(&w), 2);
  if (!in || std::memcmp(magic, "WSCF", 4) != 0) throw DatasetError(path, "bad distance-map header");
  Tensor<float> map({h, w});
  in.read(reinterpret_cast<char*>(map.data()), static_cast<std::streamsize>(map.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(map.size() * sizeof(float))) {
    throw DatasetError(path, "truncated distance map");
  }
  return map;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  const auto& m = dataset.manifest;
  fs::create_directories(dir);
  json frames = json::array();
  for (const auto& r : m.frames) frames.push_back({{"id", r.frame_id}, {"path", r.path}, {"split", r.split}});
  write_json(dir / "manifest.json", {{"format", "wscf-dataset"},
                                     {"version", 1},
                                     {"views", m.views},
                                     {"width", m.width},
                                     {"height", m.height},
                                     {"seed", m.seed},
                                     {"png_scale", m.png_scale},
                                     {"layout", m.layout},
                                     {"overlap_factor", m.overlap_factor},
                                     {"warnings", m.warnings},
                                     {"frames", frames}});

  auto write_frame = [&](const MultiViewFrame& frame, const std::string& rel) {
    const fs::path fdir = dir / rel;
    fs::create_directories(fdir);
    json views = json::array();
    for (int v = 0; v < frame.view_count(); ++v) {
      const auto& view = frame.views[v];
      write_png16(fdir / ("view_" + std::to_string(v) + ".png"), view.image, m.png_scale);
      write_distance_map(fdir / ("view_" + std::to_string(v) + "_distance.bin"), view.distance);
      json heads = json::array();
      for (const auto& hp : view.heads) heads.push_back({hp.person_id, hp.x, hp.y});
      views.push_back({{"count", view.count()}, {"heads", heads}});
    }
    write_json(fdir / "annotations.json", {{"scene_count", frame.scene_count}, {"views", views}});
  };
  std::size_t ti = 0, si = 0;
  for (const auto& r : m.frames) {
    const auto& frame = r.split == "train" ? dataset.train.at(ti++) : dataset.test.at(si++);
    write_frame(frame, r.path);
  }
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  const json j = read_json(mpath);
  Dataset ds;
  auto& m = ds.manifest;
  try {
    if (j.at("format") != "wscf-dataset" || j.at("version") != 1) throw DatasetError(mpath, "unsupported format");
    m.views = j.at("views");
    m.width = j.at("width");
    m.height = j.at("height");
    m.seed = j.at("seed");
    m.png_scale = j.at("png_scale");
    m.layout = j.at("layout");
    m.overlap_factor = j.at("overlap_factor");
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& r : j.at("frames")) m.frames.push_back({r.at("id"), r.at("path"), r.at("split")});
  } catch (const json::exception& e) {
    throw DatasetError(mpath, std::string("malformed manifest: ") + e.what());
  }

  for (const auto& r : m.frames) {
    const fs::path fdir = dir / r.path;
    const fs::path apath = fdir / "annotations.json";
    const json a = read_json(apath);
    MultiViewFrame frame;
    frame.frame_id = r.frame_id;
    try {
      frame.scene_count = a.at("scene_count");
      if (static_cast<int>(a.at("views").size()) != m.views) throw DatasetError(apath, "view count mismatch");
      for (int v = 0; v < m.views; ++v) {
        const json& av = a.at("views").at(v);
        ViewData view;
        view.image = read_png16(fdir / ("view_" + std::to_string(v) + ".png"), m.png_scale);
        view.distance = read_distance_map(fdir / ("view_" + std::to_string(v) + "_distance.bin"));
        for (const auto& hj : av.at("heads")) view.heads.push_back({hj.at(0), hj.at(1), hj.at(2)});
        if (view.count() != av.at("count").get<int>()) throw DatasetError(apath, "count does not match heads");
        frame.views.push_back(std::move(view));
      }
    } catch (const json::exception& e) {
      throw DatasetError(apath, std::string("malformed annotations: ") + e.what());
    }
    (r.split == "train" ? ds.train : ds.test).push_back(std::move(frame));
  }
  return ds;
}

#define WSCF_SCENE_FIELDS(X)                                                                     \
  X(views) X(width) X(height) X(layout) X(fov_degrees) X(extent) X(min_people) X(max_people)    \
  X(head_height) X(blob_sigma_m) X(blob_sigma_min_px) X(blob_sigma_max_px) X(occlusion_radius_px) \
  X(far_plane) X(background_level) X(noise_std) X(png_scale) X(train_frames) X(test_frames) X(seed)

json to_json(const SceneConfig& c) {
  json j;
#define X(f) j[#f] = c.f;
  WSCF_SCENE_FIELDS(X)
#undef X
  return j;
}

SceneConfig scene_config_from_json(const json& j) {
  SceneConfig c;
  std::set<std::string> known;
#define X(f)                                 \
  known.insert(#f);                          \
  if (j.contains(#f)) j.at(#f).get_to(c.f);
  WSCF_SCENE_FIELDS(X)
#undef X
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown scene config key '" + key + "'");
  }
  return c;
}

}  // namespace wscf::scenesim
