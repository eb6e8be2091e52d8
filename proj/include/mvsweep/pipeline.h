#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvsweep/config.h"
#include "mvsweep/depth_inference.h"
#include "mvsweep/features.h"
#include "mvsweep/geometry.h"
#include "mvsweep/metrics.h"

namespace mvsweep {

// One line of vit/manifest.txt:
//   <image> <feat.mvtf> <attn.mvtf> <attn_mean.mvtf> <model> <H>x<W>
// Paths are relative to the manifest's directory.
struct VitManifestEntry {
  std::filesystem::path image;
  std::filesystem::path feat;
  std::filesystem::path attn;
  std::filesystem::path attn_mean;
  std::string model;
  int input_height = 0;
  int input_width = 0;
};

std::vector<VitManifestEntry> ReadVitManifest(const std::filesystem::path& path);

// A scene directory: views.txt lists view ids in priority order; each id has
// images/<id>.ppm (or .pgm) and cams/<id>_cam.txt. vit/manifest.txt is
// optional.
struct Dataset {
  std::filesystem::path root;
  std::vector<std::string> ids;
  std::vector<CameraView> views;
  std::map<std::string, VitManifestEntry> vit;  // keyed by image file stem
};

Dataset LoadDataset(const std::filesystem::path& root);

size_t ViewIndex(const Dataset& data, const std::string& id);

// Reference first, then up to views - 1 sources in listed order.
std::vector<size_t> SelectViews(const Dataset& data, size_t ref, int views);

struct DepthEstimate {
  InferenceResult inference;
  Tensor wta;  // stage-1 winner-take-all depth of the fused correlation
};

// Features, warping, correlation, visibility fusion, regularization and the
// four-stage cascade for one reference view.
DepthEstimate EstimateDepth(const Dataset& data, size_t ref, const PipelineConfig& config);

// Writes <out>/depth/<id>.pfm and <out>/confidence/<id>.pfm.
void RunDepth(const Dataset& data, const std::vector<size_t>& refs, const PipelineConfig& config,
              const std::filesystem::path& out);

// Fuses every listed view's maps from <out> into <out>/cloud.ply.
PointCloud RunFuse(const Dataset& data, const PipelineConfig& config,
                   const std::filesystem::path& out);

struct MetricsReport {
  std::optional<DepthErrorRatios> depth;
  std::optional<CloudMetrics> cloud;
};

// "e2 e4 e8 acc comp overall" with 6 decimals; absent parts print "nan".
std::string FormatReport(const MetricsReport& report);

// Depth maps are paired by position; empty lists skip that part.
MetricsReport Evaluate(const std::vector<std::filesystem::path>& pred_depths,
                       const std::vector<std::filesystem::path>& gt_depths,
                       const std::optional<std::filesystem::path>& pred_cloud,
                       const std::optional<std::filesystem::path>& gt_cloud);

}  // namespace mvsweep
