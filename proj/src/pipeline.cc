#include "mvsweep/pipeline.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mvsweep/cost_volume.h"
#include "mvsweep/fusion.h"
#include "mvsweep/io.h"

namespace mvsweep {

namespace fs = std::filesystem;

std::vector<VitManifestEntry> ReadVitManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::kOpenFailed, path.string());
  const fs::path dir = path.parent_path();
  std::vector<VitManifestEntry> out;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::string image;
    if (!(ls >> image)) continue;
    VitManifestEntry e;
    std::string feat, attn, mean, size, extra;
    if (!(ls >> feat >> attn >> mean >> e.model >> size) || (ls >> extra) ||
        std::sscanf(size.c_str(), "%dx%d", &e.input_height, &e.input_width) != 2 ||
        e.input_height <= 0 || e.input_width <= 0) {
      throw IoError(IoErrc::kMalformedHeader,
                    path.string() + " line " + std::to_string(line) +
                        ": expected '<image> <feat> <attn> <attn_mean> <model> <H>x<W>'");
    }
    e.image = image;
    e.feat = dir / feat;
    e.attn = dir / attn;
    e.attn_mean = dir / mean;
    out.push_back(std::move(e));
  }
  return out;
}

Dataset LoadDataset(const fs::path& root) {
  Dataset data;
  data.root = root;
  std::ifstream list(root / "views.txt");
  if (!list) throw IoError(IoErrc::kOpenFailed, (root / "views.txt").string());
  std::string id;
  while (list >> id) data.ids.push_back(id);
  if (data.ids.empty()) throw IoError(IoErrc::kMissingSection, "views.txt lists no views");

  for (const auto& v : data.ids) {
    fs::path image = root / "images" / (v + ".ppm");
    if (!fs::exists(image)) image = root / "images" / (v + ".pgm");
    if (!fs::exists(image)) throw IoError(IoErrc::kOpenFailed, "no image for view " + v);
    CameraView cam = MakeCameraView(ReadCam(root / "cams" / (v + "_cam.txt")), ReadImage(image));
    if (!data.views.empty() && cam.image.shape() != data.views[0].image.shape()) {
      throw std::invalid_argument("view " + v + " has image size " + cam.image.ShapeString() +
                                  ", expected " + data.views[0].image.ShapeString());
    }
    data.views.push_back(std::move(cam));
  }

  const fs::path manifest = root / "vit" / "manifest.txt";
  if (fs::exists(manifest)) {
    for (auto& e : ReadVitManifest(manifest)) data.vit[e.image.stem().string()] = std::move(e);
  }
  return data;
}

size_t ViewIndex(const Dataset& data, const std::string& id) {
  for (size_t i = 0; i < data.ids.size(); ++i) {
    if (data.ids[i] == id) return i;
  }
  throw std::invalid_argument("unknown view id '" + id + "'");
}

std::vector<size_t> SelectViews(const Dataset& data, size_t ref, int views) {
  if (ref >= data.ids.size()) throw std::out_of_range("reference view index out of range");
  std::vector<size_t> out = {ref};
  for (size_t i = 0; i < data.ids.size() && static_cast<int>(out.size()) < views; ++i) {
    if (i != ref) out.push_back(i);
  }
  if (out.size() < 2) throw std::invalid_argument("scene has no source views");
  return out;
}

namespace {

FeaturePyramid ViewFeatures(const Dataset& data, size_t view, const PipelineConfig& config,
                            const GluWeights* glu) {
  FeaturePyramid pyr = BuildPyramid(data.views[view].image);
  if (config.feature_source == FeatureSource::kVitFiles) {
    const std::string& id = data.ids[view];
    const auto it = data.vit.find(id);
    if (it == data.vit.end()) {
      throw IoError(IoErrc::kOpenFailed, "no ViT feature files listed for view " + id);
    }
    const VitFeatures vit = LoadVitFeatures(it->second.feat, it->second.attn, it->second.attn_mean);
    pyr = InjectVit(pyr, GluFuse(vit, *glu), *glu);
  }
  for (auto& level : pyr.levels) level = GroupNormalize(level, config.groups);
  return pyr;
}

GluWeights LoadGlu(const Dataset& data, size_t ref, const PipelineConfig& config) {
  if (!config.glu_weights.empty()) {
    GluWeights w = ReadGluWeights(config.glu_weights);
    if (w.out_channels() != config.channels) {
      throw std::invalid_argument("GLU weights project to " + std::to_string(w.out_channels()) +
                                  " channels, pyramid has " + std::to_string(config.channels));
    }
    return w;
  }
  const auto it = data.vit.find(data.ids[ref]);
  if (it == data.vit.end()) {
    throw IoError(IoErrc::kOpenFailed, "no ViT feature files listed for view " + data.ids[ref]);
  }
  const VitFeatures probe =
      LoadVitFeatures(it->second.feat, it->second.attn, it->second.attn_mean);
  return GluWeights::FromSeed(config.glu_seed, probe.feat.dim(0), probe.attn.dim(0),
                              config.glu_reduced_channels, config.channels);
}

Tensor Scaled(Tensor t, float gain) {
  for (float& v : t.data()) v *= gain;
  return t;
}

}  // namespace

DepthEstimate EstimateDepth(const Dataset& data, size_t ref, const PipelineConfig& config) {
  config.Validate();
  const std::vector<size_t> sel = SelectViews(data, ref, config.views);
  const CameraView& ref_cam = data.views[ref];
  const int height = ref_cam.image.dim(0);
  const int width = ref_cam.image.dim(1);
  const int multiple = config.feature_source == FeatureSource::kVitFiles ? 32 : 8;
  if (height % multiple != 0 || width % multiple != 0) {
    throw std::invalid_argument("image size " + ref_cam.image.ShapeString() +
                                " is not divisible by " + std::to_string(multiple));
  }

  std::optional<GluWeights> glu;
  if (config.feature_source == FeatureSource::kVitFiles) glu = LoadGlu(data, ref, config);
  std::vector<FeaturePyramid> pyramids;
  for (size_t v : sel) pyramids.push_back(ViewFeatures(data, v, config, glu ? &*glu : nullptr));

  std::vector<RelativePose> poses;
  for (size_t k = 1; k < sel.size(); ++k) {
    poses.push_back(ComputeRelativePose(ref_cam, data.views[sel[k]]));
  }

  DepthEstimate out;
  auto volume_fn = [&](int stage, const DepthHypotheses& hyp) {
    const int level = stage - 1;
    const double scale = 1.0 / static_cast<double>(1 << (4 - stage));
    const Eigen::Matrix3d k_ref = ScaleIntrinsics(ref_cam.K, scale);
    const Tensor& ref_feat = pyramids[0].levels[level];
    std::vector<CostVolume> volumes;
    std::vector<Tensor> weights;
    for (size_t k = 1; k < sel.size(); ++k) {
      const Eigen::Matrix3d k_src = ScaleIntrinsics(data.views[sel[k]].K, scale);
      WarpedFeature warped =
          WarpFeature(pyramids[k].levels[level], hyp, k_ref, k_src, poses[k - 1]);
      // Bilinear blends of unit vectors are shorter than unit length, which
      // would favour hypotheses landing on integer source pixels.
      warped.data = GroupNormalize(warped.data, config.groups);
      volumes.push_back(GroupwiseCorrelation(ref_feat, warped, config.groups));
      weights.push_back(VisibilityWeight(volumes.back(), config.logit_gain));
    }
    const CostVolume fused = FuseVolumes(volumes, weights);
    if (stage == 1) out.wta = WtaDiagnostic(fused, hyp);
    return Scaled(Regularize(fused, config.regularize), config.logit_gain);
  };

  CascadeConfig cascade;
  cascade.hypotheses = config.hypotheses;
  cascade.temperatures = config.temperatures;
  cascade.d_min = ref_cam.d_min;
  cascade.d_max = ref_cam.d_max;
  cascade.height = height;
  cascade.width = width;
  out.inference = StagedInference(volume_fn, cascade);
  return out;
}

void RunDepth(const Dataset& data, const std::vector<size_t>& refs, const PipelineConfig& config,
              const fs::path& out) {
  fs::create_directories(out / "depth");
  fs::create_directories(out / "confidence");
  for (size_t ref : refs) {
    const DepthEstimate est = EstimateDepth(data, ref, config);
    WritePfm(est.inference.depth, out / "depth" / (data.ids[ref] + ".pfm"));
    WritePfm(est.inference.confidence, out / "confidence" / (data.ids[ref] + ".pfm"));
  }
}

PointCloud RunFuse(const Dataset& data, const PipelineConfig& config, const fs::path& out) {
  config.Validate();
  std::vector<DepthView> views;
  for (size_t i = 0; i < data.ids.size(); ++i) {
    const fs::path depth = out / "depth" / (data.ids[i] + ".pfm");
    const fs::path conf = out / "confidence" / (data.ids[i] + ".pfm");
    if (!fs::exists(depth) || !fs::exists(conf)) {
      throw IoError(IoErrc::kOpenFailed, "missing depth or confidence map for view " + data.ids[i]);
    }
    views.push_back({ReadPfm(depth), ReadPfm(conf), data.views[i]});
  }
  PointCloud cloud = FuseToCloud(views, config.filter);
  WritePly(cloud, out / "cloud.ply");
  return cloud;
}

std::string FormatReport(const MetricsReport& report) {
  std::string out;
  auto add = [&out](std::optional<double> v) {
    char buf[64];
    if (v) {
      std::snprintf(buf, sizeof(buf), "%.6f", *v);
    } else {
      std::snprintf(buf, sizeof(buf), "nan");
    }
    if (!out.empty()) out += ' ';
    out += buf;
  };
  for (int k = 0; k < 3; ++k) {
    add(report.depth ? std::optional<double>(report.depth->e[k]) : std::nullopt);
  }
  add(report.cloud ? std::optional<double>(report.cloud->acc) : std::nullopt);
  add(report.cloud ? std::optional<double>(report.cloud->comp) : std::nullopt);
  add(report.cloud ? std::optional<double>(report.cloud->overall) : std::nullopt);
  return out;
}

MetricsReport Evaluate(const std::vector<fs::path>& pred_depths,
                       const std::vector<fs::path>& gt_depths,
                       const std::optional<fs::path>& pred_cloud,
                       const std::optional<fs::path>& gt_cloud) {
  if (pred_depths.size() != gt_depths.size()) {
    throw std::invalid_argument("predicted and ground-truth depth lists differ in length");
  }
  if (pred_cloud.has_value() != gt_cloud.has_value()) {
    throw std::invalid_argument("cloud evaluation needs both a predicted and a reference cloud");
  }
  MetricsReport report;
  if (!pred_depths.empty()) {
    DepthErrorCounts counts;
    for (size_t i = 0; i < pred_depths.size(); ++i) {
      counts += CountDepthErrors(ReadPfm(pred_depths[i]), ReadPfm(gt_depths[i]));
    }
    report.depth = ToRatios(counts);
  }
  if (pred_cloud) report.cloud = ComputeCloudMetrics(ReadPly(*pred_cloud), ReadPly(*gt_cloud));
  return report;
}

}  // namespace mvsweep
