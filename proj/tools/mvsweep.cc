#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mvsweep/config.h"
#include "mvsweep/pipeline.h"
#include "mvsweep/scheduler.h"
#include "mvsweep/synth.h"

namespace fs = std::filesystem;
using namespace mvsweep;

namespace {

struct Options {
  std::string config;
  std::string scene;
  std::string ref;
  std::string out = "out";
  std::string temps;
  std::string mode;
  uint64_t seed = 0;
  int n = 0;
  int batch = 8;
  std::string variant = "H";
  std::vector<std::string> pred_depth;
  std::vector<std::string> gt_depth;
  std::string pred_cloud;
  std::string gt_cloud;
};

PipelineConfig LoadConfig(const Options& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : ReadConfig(o.config);
  if (!o.temps.empty()) c.temperatures = ParseTemperatures(o.temps);
  if (o.mode == "static") c.filter.mode = FilterMode::kStatic;
  if (o.mode == "dynamic") c.filter.mode = FilterMode::kDynamic;
  c.Validate();
  return c;
}

int CmdDepth(const Options& o) {
  const Dataset data = LoadDataset(o.scene);
  std::vector<size_t> refs;
  if (o.ref.empty()) {
    for (size_t i = 0; i < data.ids.size(); ++i) refs.push_back(i);
  } else {
    refs.push_back(ViewIndex(data, o.ref));
  }
  RunDepth(data, refs, LoadConfig(o), o.out);
  return 0;
}

int CmdFuse(const Options& o) {
  const PointCloud cloud = RunFuse(LoadDataset(o.scene), LoadConfig(o), o.out);
  std::printf("%zu points\n", cloud.points.size());
  return 0;
}

int CmdEval(const Options& o) {
  std::vector<fs::path> pred(o.pred_depth.begin(), o.pred_depth.end());
  std::vector<fs::path> gt(o.gt_depth.begin(), o.gt_depth.end());
  std::optional<fs::path> pred_cloud;
  std::optional<fs::path> gt_cloud;
  if (!o.pred_cloud.empty()) pred_cloud = o.pred_cloud;
  if (!o.gt_cloud.empty()) gt_cloud = o.gt_cloud;
  if (!o.scene.empty()) {
    // Pair every depth map under <out>/depth with the scene's ground truth.
    const Dataset data = LoadDataset(o.scene);
    for (const auto& id : data.ids) {
      const fs::path p = fs::path(o.out) / "depth" / (id + ".pfm");
      if (fs::exists(p)) {
        pred.push_back(p);
        gt.push_back(fs::path(o.scene) / "depth_gt" / (id + ".pfm"));
      }
    }
    const fs::path pc = fs::path(o.out) / "cloud.ply";
    const fs::path gc = fs::path(o.scene) / "gt_cloud.ply";
    if (!pred_cloud && fs::exists(pc) && fs::exists(gc)) {
      pred_cloud = pc;
      gt_cloud = gc;
    }
  }
  std::printf("%s\n", FormatReport(Evaluate(pred, gt, pred_cloud, gt_cloud)).c_str());
  return 0;
}

int CmdRender(const Options& o) {
  WriteDataset(ReadSceneSpec(o.scene), o.out);
  return 0;
}

int CmdPlan(const Options& o) {
  const ModelVariant v = o.variant == "P" ? ModelVariant::kPlain : ModelVariant::kHierarchical;
  const EpochPlan plan = MakeEpochPlan(o.n, DefaultPatterns(v), o.batch, o.seed);
  std::fputs(FormatPlan(plan).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane-sweep multi-view stereo engine"};
  app.require_subcommand(1);
  Options o;

  auto* depth = app.add_subcommand("depth", "Estimate depth and confidence maps");
  depth->add_option("--scene", o.scene, "Scene directory")->required();
  depth->add_option("--ref", o.ref, "Reference view id (default: every view)");
  depth->add_option("--out", o.out, "Output directory");
  depth->add_option("--config", o.config, "Pipeline config file");
  depth->add_option("--temps", o.temps, "Per-stage temperatures t1,t2,t3,t4 (inf allowed)");

  auto* fuse = app.add_subcommand("fuse", "Fuse depth maps into out/cloud.ply");
  fuse->add_option("--scene", o.scene, "Scene directory")->required();
  fuse->add_option("--out", o.out, "Directory holding depth/ and confidence/");
  fuse->add_option("--config", o.config, "Pipeline config file");
  fuse->add_option("--mode", o.mode, "Consistency filter")
      ->check(CLI::IsMember({"static", "dynamic"}));

  auto* eval = app.add_subcommand("eval", "Print e2 e4 e8 acc comp overall");
  eval->add_option("--scene", o.scene, "Scene directory with depth_gt/ and gt_cloud.ply");
  eval->add_option("--out", o.out, "Run directory evaluated against --scene");
  eval->add_option("--pred-depth", o.pred_depth, "Predicted depth PFMs");
  eval->add_option("--gt-depth", o.gt_depth, "Ground-truth depth PFMs, same order");
  eval->add_option("--pred-cloud", o.pred_cloud, "Predicted PLY");
  eval->add_option("--gt-cloud", o.gt_cloud, "Ground-truth PLY");

  auto* render = app.add_subcommand("render", "Render a scene spec into a dataset directory");
  render->add_option("--scene", o.scene, "Scene spec file")->required();
  render->add_option("--out", o.out, "Output dataset directory");

  auto* plan = app.add_subcommand("plan", "Print a multi-scale epoch plan");
  plan->add_option("--n", o.n, "Number of samples")->required();
  plan->add_option("--variant", o.variant, "Model variant")->check(CLI::IsMember({"P", "H"}));
  plan->add_option("--seed", o.seed, "Shuffle seed");
  plan->add_option("--batch", o.batch, "Effective batch size");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*depth) return CmdDepth(o);
    if (*fuse) return CmdFuse(o);
    if (*eval) return CmdEval(o);
    if (*render) return CmdRender(o);
    return CmdPlan(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
