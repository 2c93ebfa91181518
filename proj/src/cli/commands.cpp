#include "wscf/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "wscf/scenesim/dataset_io.hpp"
#include "wscf/substrate/ops.hpp"

namespace wscf::cli {

namespace {

const mvce::Stage kStages[] = {mvce::Stage::kSvcc, mvce::Stage::kHomography, mvce::Stage::kFusion};

std::string format_scale(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Scales a map by 255 / max; returns the max (0 for an all-zero or negative map).
double normalize_to_byte(Tensor<float>& t) {
  double peak = 0;
  for (float v : t.values()) peak = std::max(peak, static_cast<double>(v));
  for (auto& v : t.values()) v = peak > 0 ? static_cast<float>(std::max(0.0, v / peak) * 255.0) : 0.f;
  return peak;
}

Tensor<float> plane(const Tensor<float>& batch, int n, int c = 0) {
  const int h = batch.dim(2), w = batch.dim(3);
  Tensor<float> out({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = batch.at(n, c, y, x);
  return out;
}

void audit_weak(const scenesim::AccessLog& log, std::ostream& os) {
  const auto heads = log.count(scenesim::kSvccLossPath, scenesim::AnnotationField::kHeadPoints);
  const auto dens = log.count(scenesim::kSvccLossPath, scenesim::AnnotationField::kDensityMap);
  const auto counts = log.count(scenesim::kSvccLossPath, scenesim::AnnotationField::kViewCount);
  os << "weak-supervision audit: svcc_loss read " << counts << " view counts, " << heads << " head lists, " << dens
     << " density maps\n";
  if (heads || dens) throw std::logic_error("weak-supervision audit failed: SVCC loss read location annotations");
}

}  // namespace

fs::path checkpoint_path(const fs::path& run_dir, mvce::Stage stage) {
  return run_dir / (mvce::to_string(stage) + ".ckpt");
}

fs::path loss_curve_path(const fs::path& run_dir, mvce::Stage stage) {
  return run_dir / ("loss_" + mvce::to_string(stage) + ".csv");
}

scenesim::DatasetManifest cmd_gen(const RunConfig& config, const fs::path& out, bool force, std::ostream& log) {
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw std::runtime_error(out.string() + " exists and is not empty (use --force to overwrite)");
    fs::remove_all(out);
  }
  const scenesim::Dataset ds = scenesim::generate_scene(config.scene);
  scenesim::write_dataset(ds, out);
  int pairs_with_overlap = 0, pairs = 0;
  for (const auto& f : ds.train) {
    for (int i = 0; i < f.view_count(); ++i)
      for (int j = 0; j < f.view_count(); ++j) {
        if (i == j) continue;
        ++pairs;
        if (!geometry::is_dummy(scenesim::gt_homography(f, i, j))) ++pairs_with_overlap;
      }
  }
  log << "wrote " << ds.train.size() << " train / " << ds.test.size() << " test frames to " << out.string() << "\n";
  log << "views " << ds.manifest.views << ", overlap factor (sum of view counts / scene count) " << std::fixed
      << std::setprecision(3) << ds.manifest.overlap_factor << std::defaultfloat << "\n";
  if (pairs) log << "ordered pairs with >= 4 shared people: " << pairs_with_overlap << " / " << pairs << "\n";
  for (const auto& w : ds.manifest.warnings) log << "warning: " << w << "\n";
  return ds.manifest;
}

void write_loss_curve(const fs::path& path, const std::vector<mvce::EpochLoss>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(9) << "stage,epoch,total,l_s,l_di,l_d,l_h\n";
  for (const auto& e : curve) {
    out << mvce::to_string(e.stage) << ',' << e.epoch << ',' << e.total << ',' << e.l_s << ',' << e.l_di << ','
        << e.l_d << ',' << e.l_h << '\n';
  }
}

TrainOutput cmd_train(const RunConfig& config, const std::string& stage, std::ostream& log,
                      scenesim::AccessLog* audit) {
  validate(config);
  std::vector<mvce::Stage> stages;
  if (stage == "all") stages.assign(std::begin(kStages), std::end(kStages));
  else stages.push_back(mvce::stage_from_string(stage));

  const fs::path run_dir = config.run_dir;
  // prerequisites of the first requested stage must already be on disk
  std::vector<fs::path> needed;
  if (stages.front() != mvce::Stage::kSvcc) needed.push_back(checkpoint_path(run_dir, mvce::Stage::kSvcc));
  if (stages.front() == mvce::Stage::kFusion) needed.push_back(checkpoint_path(run_dir, mvce::Stage::kHomography));
  std::string missing;
  for (const auto& p : needed)
    if (!fs::exists(p)) missing += " " + p.string();
  if (!missing.empty()) {
    throw mvce::MissingPrerequisite("stage " + stage + " needs earlier checkpoints; missing:" + missing);
  }

  const scenesim::Dataset ds = scenesim::read_dataset(config.dataset);
  fs::create_directories(run_dir);
  scenesim::AccessLog local_log;
  scenesim::AccessLog* access = audit ? audit : &local_log;

  mvce::MultiViewCounter model(config.model, config.train.seed);
  mvce::StagedTrainer trainer(model, ds.train, config.train, access);
  for (const auto& p : needed) {
    const Checkpoint c = load_checkpoint(p);
    restore_parameters(c, model, {c.stage});
    trainer.mark_completed(mvce::stage_from_string(c.stage));
  }
  if (needed.size() == 2) {
    // the homography checkpoint carries the svcc weights it was trained next to
    const Checkpoint h = load_checkpoint(needed[1]);
    const Checkpoint s = load_checkpoint(needed[0]);
    for (const auto& [name, v] : model.svcc_parameters().items()) {
      if (h.tensor("param/svcc/" + name).storage() != s.tensor("param/svcc/" + name).storage()) {
        throw std::runtime_error(needed[1].string() + " was not trained on top of " + needed[0].string());
      }
    }
  }

  const nlohmann::json snapshot = to_json(config);
  TrainOutput out;
  for (auto s : stages) {
    log << "training stage " << mvce::to_string(s) << " (" << ds.train.size() << " frames, "
        << (s == mvce::Stage::kSvcc ? config.train.svcc.epochs
            : s == mvce::Stage::kHomography ? config.train.homography.epochs
                                            : config.train.fusion.epochs)
        << " epochs)\n";
    const auto curve = trainer.run(s);
    std::vector<mvce::Stage> completed;
    for (auto st : kStages)
      if (trainer.completed(st)) completed.push_back(st);
    const fs::path ck = checkpoint_path(run_dir, s);
    save_checkpoint(ck, make_checkpoint(s, completed, model, trainer, snapshot));
    write_loss_curve(loss_curve_path(run_dir, s), curve);
    if (!curve.empty()) log << "  final epoch loss " << curve.back().total << "\n";
    log << "  wrote " << ck.string() << "\n";
    out.checkpoints.push_back(ck);
    out.curve.insert(out.curve.end(), curve.begin(), curve.end());
  }
  if (config.train.supervision == mvce::Supervision::kWeak) audit_weak(*access, log);
  return out;
}

std::unique_ptr<mvce::MultiViewCounter> load_model(const Checkpoint& c) {
  const mvce::ModelConfig mc = model_config_from_json(c.config.at("model"));
  auto model = std::make_unique<mvce::MultiViewCounter>(mc, 0);
  restore_parameters(c, *model, c.completed_stages);
  return model;
}

mvce::EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& dataset, const EvalOptions& options,
                          const fs::path& out, std::ostream& log) {
  const Checkpoint c = load_checkpoint(checkpoint);
  const RunConfig trained = run_config_from_json(c.config);
  if (options.ablate_match_supervision && trained.train.use_match_supervision) {
    throw std::invalid_argument("--ablate-match-supervision needs a checkpoint trained without match supervision; " +
                                checkpoint.string() + " was trained with it");
  }
  const scenesim::Dataset ds = scenesim::read_dataset(dataset);
  if (ds.manifest.width != trained.scene.width || ds.manifest.height != trained.scene.height) {
    // the nets are fully convolutional except the homography head, which needs the trained size
    throw std::invalid_argument("dataset images are " + std::to_string(ds.manifest.width) + "x" +
                                std::to_string(ds.manifest.height) + " but the checkpoint was trained on " +
                                std::to_string(trained.scene.width) + "x" + std::to_string(trained.scene.height));
  }
  std::vector<int> views = options.views;
  if (views.empty()) {
    views.resize(ds.manifest.views);
    std::iota(views.begin(), views.end(), 0);
  }
  for (int v : views) {
    if (v < 0 || v >= ds.manifest.views) {
      throw std::invalid_argument("view " + std::to_string(v) + " not in dataset (views 0.." +
                                  std::to_string(ds.manifest.views - 1) + ")");
    }
  }
  const bool fused = std::find(c.completed_stages.begin(), c.completed_stages.end(), "fusion") != c.completed_stages.end();
  if (options.pipeline == mvce::Pipeline::kModel && views.size() > 1 && !fused) {
    throw std::invalid_argument(checkpoint.string() + " has no trained fusion stage");
  }
  auto model = load_model(c);
  if (options.ablate_distance) {
    if (model->config().mwe.use_distance) {
      log << "note: checkpoint uses distance features; evaluating with a zeroed distance map\n";
      model->set_distance_zeroed(true);
    }
  }
  const auto& frames = options.split == "train" ? ds.train : ds.test;
  const mvce::EvalReport report = mvce::evaluate(model.get(), frames, views, options.pipeline, trained.train.annotations);
  if (!out.empty()) {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out.string());
    mvce::write_csv(os, report);
  }
  log << "views " << report.view_count << ": MAE " << report.mae << "  NAE " << report.nae << "  ("
      << report.rows.size() << " frames, " << report.excluded_zero << " with zero count excluded from NAE)\n";
  return report;
}

std::vector<fs::path> cmd_render(const fs::path& checkpoint, const fs::path& dataset, int frame_id,
                                 const fs::path& out_dir) {
  const Checkpoint c = load_checkpoint(checkpoint);
  auto model = load_model(c);
  const scenesim::Dataset ds = scenesim::read_dataset(dataset);
  std::vector<scenesim::MultiViewFrame> one;
  for (const auto* split : {&ds.train, &ds.test})
    for (const auto& f : *split)
      if (f.frame_id == frame_id) one.push_back(f);
  if (one.empty()) throw std::invalid_argument("frame " + std::to_string(frame_id) + " not in dataset");

  scenesim::AnnotationReader reader(one);
  std::vector<int> views(reader.views());
  std::iota(views.begin(), views.end(), 0);
  NoGradGuard guard;
  const mvce::FrozenInputs in = model->run_frozen(reader, 0, views);
  const auto pairs = mwe::ordered_pairs(static_cast<int>(views.size()));
  const mvce::FusionOutput fused = model->fuse(in, model->predict_homographies(in.homography_features, pairs));

  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& stem, Tensor<float> map) {
    const double scale = normalize_to_byte(map);
    const fs::path p = out_dir / (stem + "_scale" + format_scale(scale) + ".png");
    scenesim::write_png8(p, map);
    written.push_back(p);
  };
  for (std::size_t i = 0; i < views.size(); ++i) {
    const int v = static_cast<int>(i);
    const std::string tag = "frame" + std::to_string(frame_id) + "_view" + std::to_string(views[i]);
    emit(tag + "_input", reader.image(0, views[i]));
    emit(tag + "_density", plane(in.density, v));
    emit(tag + "_confidence", plane(fused.confidence.value(), v));
    emit(tag + "_weight", plane(fused.weights.value(), v));
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    emit("frame" + std::to_string(frame_id) + "_match_" + std::to_string(pairs[k].i) + "_" +
             std::to_string(pairs[k].j),
         plane(fused.match.value(), static_cast<int>(k)));
  }
  return written;
}

}  // namespace wscf::cli
