#include "wscf/cli/run_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "wscf/scenesim/dataset_io.hpp"

namespace wscf::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + where + "." + key + "'");
  }
}

#define WSCF_COUNTING_FIELDS(X) \
  X(stage1_channels) X(stage2_channels) X(feature_channels) X(decoder_channels) X(input_scale) X(output_bias)
#define WSCF_MWE_FIELDS(X)                                                                             \
  X(pooled_size) X(homography_channels) X(match_channels) X(confidence_channels) X(distance_channels) \
  X(distance_scale) X(use_distance)
#define WSCF_ANNOTATION_FIELDS(X) X(density_sigma) X(match_radius) X(stride)

#define WSCF_TO(f) j[#f] = c.f;
#define WSCF_FROM(f)   \
  known.insert(#f);    \
  if (j.contains(#f)) j.at(#f).get_to(c.f);

json counting_to_json(const svcc::CountingNetConfig& c) {
  json j;
  WSCF_COUNTING_FIELDS(WSCF_TO)
  return j;
}

svcc::CountingNetConfig counting_from_json(const json& j, const std::string& where) {
  svcc::CountingNetConfig c;
  std::set<std::string> known;
  WSCF_COUNTING_FIELDS(WSCF_FROM)
  reject_unknown(j, known, where);
  return c;
}

json annotations_to_json(const scenesim::AnnotationSettings& c) {
  json j;
  WSCF_ANNOTATION_FIELDS(WSCF_TO)
  return j;
}

scenesim::AnnotationSettings annotations_from_json(const json& j) {
  scenesim::AnnotationSettings c;
  std::set<std::string> known;
  WSCF_ANNOTATION_FIELDS(WSCF_FROM)
  reject_unknown(j, known, "train.annotations");
  return c;
}

json mwe_to_json(const mwe::MweConfig& c) {
  json j;
  WSCF_MWE_FIELDS(WSCF_TO)
  j["homography_extractor"] = counting_to_json(c.homography_extractor);
  return j;
}

mwe::MweConfig mwe_from_json(const json& j) {
  mwe::MweConfig c;
  std::set<std::string> known{"homography_extractor"};
  WSCF_MWE_FIELDS(WSCF_FROM)
  reject_unknown(j, known, "model.mwe");
  if (j.contains("homography_extractor")) {
    c.homography_extractor = counting_from_json(j.at("homography_extractor"), "model.mwe.homography_extractor");
  }
  return c;
}

json schedule_to_json(const mvce::StageSchedule& s) {
  return {{"epochs", s.epochs}, {"learning_rate", s.learning_rate}};
}

mvce::StageSchedule schedule_from_json(const json& j, const std::string& where) {
  mvce::StageSchedule s;
  reject_unknown(j, {"epochs", "learning_rate"}, where);
  if (j.contains("epochs")) j.at("epochs").get_to(s.epochs);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(s.learning_rate);
  return s;
}

json train_to_json(const mvce::TrainConfig& t) {
  json j;
  j["supervision"] = mvce::to_string(t.supervision);
  j["weights"] = {{"lambda", t.weights.lambda}, {"beta", t.weights.beta}, {"gamma", t.weights.gamma}};
  j["svcc"] = schedule_to_json(t.svcc);
  j["homography"] = schedule_to_json(t.homography);
  j["fusion"] = schedule_to_json(t.fusion);
  j["seed"] = t.seed;
  j["use_match_supervision"] = t.use_match_supervision;
  j["ranking_weight"] = t.ranking_weight;
  j["nested_crops"] = t.nested_crops;
  j["annotations"] = annotations_to_json(t.annotations);
  return j;
}

mvce::TrainConfig train_from_json(const json& j) {
  mvce::TrainConfig t;
  reject_unknown(j,
                 {"supervision", "weights", "svcc", "homography", "fusion", "seed", "use_match_supervision",
                  "ranking_weight", "nested_crops", "annotations"},
                 "train");
  if (j.contains("supervision")) t.supervision = mvce::supervision_from_string(j.at("supervision"));
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    reject_unknown(w, {"lambda", "beta", "gamma"}, "train.weights");
    if (w.contains("lambda")) w.at("lambda").get_to(t.weights.lambda);
    if (w.contains("beta")) w.at("beta").get_to(t.weights.beta);
    if (w.contains("gamma")) w.at("gamma").get_to(t.weights.gamma);
  }
  if (j.contains("svcc")) t.svcc = schedule_from_json(j.at("svcc"), "train.svcc");
  if (j.contains("homography")) t.homography = schedule_from_json(j.at("homography"), "train.homography");
  if (j.contains("fusion")) t.fusion = schedule_from_json(j.at("fusion"), "train.fusion");
  if (j.contains("seed")) j.at("seed").get_to(t.seed);
  if (j.contains("use_match_supervision")) j.at("use_match_supervision").get_to(t.use_match_supervision);
  if (j.contains("ranking_weight")) j.at("ranking_weight").get_to(t.ranking_weight);
  if (j.contains("nested_crops")) j.at("nested_crops").get_to(t.nested_crops);
  if (j.contains("annotations")) t.annotations = annotations_from_json(j.at("annotations"));
  return t;
}

}  // namespace

json to_json(const mvce::ModelConfig& m) {
  json j;
  j["counting"] = counting_to_json(m.counting);
  j["mwe"] = mwe_to_json(m.mwe);
  return j;
}

mvce::ModelConfig model_config_from_json(const json& j) {
  mvce::ModelConfig m;
  reject_unknown(j, {"counting", "mwe"}, "model");
  if (j.contains("counting")) m.counting = counting_from_json(j.at("counting"), "model.counting");
  if (j.contains("mwe")) m.mwe = mwe_from_json(j.at("mwe"));
  return m;
}

json to_json(const RunConfig& r) {
  json j;
  j["dataset"] = r.dataset;
  j["run_dir"] = r.run_dir;
  j["stage"] = r.stage;
  j["scene"] = scenesim::to_json(r.scene);
  j["model"] = to_json(r.model);
  j["train"] = train_to_json(r.train);
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig r;
  reject_unknown(j, {"dataset", "run_dir", "stage", "scene", "model", "train"}, "config");
  try {
    if (j.contains("dataset")) j.at("dataset").get_to(r.dataset);
    if (j.contains("run_dir")) j.at("run_dir").get_to(r.run_dir);
    if (j.contains("stage")) j.at("stage").get_to(r.stage);
    if (j.contains("scene")) r.scene = scenesim::scene_config_from_json(j.at("scene"));
    if (j.contains("model")) r.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) r.train = train_from_json(j.at("train"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config value: ") + e.what());
  }
  validate(r);
  return r;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void validate(const RunConfig& r) {
  if (r.stage != "all") mvce::stage_from_string(r.stage);
  for (const auto* s : {&r.train.svcc, &r.train.homography, &r.train.fusion}) {
    if (!(s->learning_rate > 0)) throw std::invalid_argument("learning rates must be > 0");
    if (s->epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  }
  const auto& w = r.train.weights;
  if (w.lambda < 0 || w.beta < 0 || w.gamma < 0) throw std::invalid_argument("loss weights must be >= 0");
  if (r.scene.views < 1) throw std::invalid_argument("scene.views must be >= 1");
  if (r.train.nested_crops < 2) throw std::invalid_argument("train.nested_crops must be >= 2");
}

}  // namespace wscf::cli
