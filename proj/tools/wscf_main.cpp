#include <fstream>
#include <sstream>
#include <iostream>

#include "CLI11.hpp"
#include "wscf/cli/commands.hpp"
#include "wscf/cli/gradcheck.hpp"

namespace {

using namespace wscf;
namespace fs = std::filesystem;

std::vector<int> parse_views(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad view index '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--views needs at least one view index");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly supervised calibration-free multi-view crowd counting"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool print_defaults = false;
  app.add_option("--config", config_path, "run configuration (JSON)");
  app.add_option("--seed", seed, "override the config seed (scene and training)");
  app.add_flag("--print-defaults", print_defaults, "print the default configuration and exit");

  std::string out, stage, views, supervision, checkpoint, dataset, pipeline = "model", split = "test", component;
  bool force = false, ablate_distance = false, ablate_match = false;
  int frame = 0;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--out", out, "dataset directory (default: config dataset)");
  gen->add_flag("--force", force, "overwrite a non-empty directory");

  auto* train = app.add_subcommand("train", "train one stage or all stages");
  train->add_option("--stage", stage, "svcc | homography | fusion | all")
      ->check(CLI::IsMember({"svcc", "homography", "fusion", "all"}));
  train->add_option("--supervision", supervision, "SVCC supervision")->check(CLI::IsMember({"full", "weak"}));
  train->add_flag("--ablate-distance", ablate_distance, "confidence without distance features");
  train->add_flag("--ablate-match-supervision", ablate_match, "train without the match-map loss");
  train->add_option("--out", out, "run directory (default: config run_dir)");

  auto* eval = app.add_subcommand("eval", "scene-count MAE / NAE of a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default: <run_dir>/fusion.ckpt)");
  eval->add_option("--dataset", dataset, "dataset directory (default: config dataset)");
  eval->add_option("--views", views, "comma-separated view indices, 0-based (default: all)");
  eval->add_option("--pipeline", pipeline, "model | naive (W = 1) | oracle (ground-truth inputs)")
      ->check(CLI::IsMember({"model", "naive", "oracle"}));
  eval->add_option("--split", split, "train | test")->check(CLI::IsMember({"train", "test"}));
  eval->add_flag("--ablate-distance", ablate_distance, "zero the distance input");
  eval->add_flag("--ablate-match-supervision", ablate_match, "require a checkpoint trained without match loss");
  eval->add_option("--out", out, "CSV output (default: <run_dir>/eval.csv)");

  auto* render = app.add_subcommand("render", "write input, D, C, W and M images of one frame");
  render->add_option("--checkpoint", checkpoint, "checkpoint file (default: <run_dir>/fusion.ckpt)");
  render->add_option("--dataset", dataset, "dataset directory (default: config dataset)");
  render->add_option("--frame", frame, "frame id")->required();
  render->add_option("--out", out, "output directory")->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of one component");
  gradcheck->add_option("component", component, "component name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    cli::RunConfig config;
    if (!config_path.empty()) config = cli::load_run_config(config_path);
    if (app.count("--seed")) {
      config.scene.seed = seed;
      config.train.seed = seed;
    }
    if (print_defaults) {
      std::cout << cli::to_json(cli::RunConfig{}).dump(2) << "\n";
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cout << app.help();
      return 1;
    }

    if (*gen) {
      cli::cmd_gen(config, out.empty() ? fs::path(config.dataset) : fs::path(out), force, std::cout);
    } else if (*train) {
      if (!supervision.empty()) config.train.supervision = mvce::supervision_from_string(supervision);
      if (ablate_distance) config.model.mwe.use_distance = false;
      if (ablate_match) config.train.use_match_supervision = false;
      if (!out.empty()) config.run_dir = out;
      cli::cmd_train(config, stage.empty() ? config.stage : stage, std::cout);
    } else if (*eval) {
      cli::EvalOptions opt;
      if (!views.empty()) opt.views = parse_views(views);
      opt.pipeline = pipeline == "naive"    ? mvce::Pipeline::kNaive
                     : pipeline == "oracle" ? mvce::Pipeline::kOracle
                                            : mvce::Pipeline::kModel;
      opt.ablate_distance = ablate_distance;
      opt.ablate_match_supervision = ablate_match;
      opt.split = split;
      const fs::path ck = checkpoint.empty() ? cli::checkpoint_path(config.run_dir, mvce::Stage::kFusion) : fs::path(checkpoint);
      cli::cmd_eval(ck, dataset.empty() ? fs::path(config.dataset) : fs::path(dataset), opt,
                    out.empty() ? fs::path(config.run_dir) / "eval.csv" : fs::path(out), std::cout);
    } else if (*render) {
      const fs::path ck = checkpoint.empty() ? cli::checkpoint_path(config.run_dir, mvce::Stage::kFusion) : fs::path(checkpoint);
      const auto files = cli::cmd_render(ck, dataset.empty() ? fs::path(config.dataset) : fs::path(dataset), frame, out);
      std::cout << "wrote " << files.size() << " images to " << out << "\n";
    } else if (*gradcheck) {
      cli::GradcheckOptions opt;
      if (app.count("--seed")) opt.seed = seed;
      const auto r = cli::run_gradcheck(component, opt);
      for (const auto& p : r.points) {
        std::cout << "  point " << p.attempt << ": "
                  << (p.rejected ? "rejected (" + p.note + "), resampled"
                                 : "max rel. err " + std::to_string(p.max_relative_error))
                  << "\n";
      }
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.component << " max rel. err " << r.max_relative_error << " over "
                << r.accepted << " points, " << r.rejected << " rejected";
      if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
      std::cout << "\n";
      return r.passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
