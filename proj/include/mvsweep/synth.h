#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "mvsweep/geometry.h"
#include "mvsweep/io.h"
#include "mvsweep/tensor.h"

namespace mvsweep {

struct CheckerTexture {
  double period = 1.0;
};
// 0.5 + 0.5 sin(2 pi k . X)
struct SinusoidTexture {
  Eigen::Vector3d wave = Eigen::Vector3d(1.0, 0.0, 0.0);
};
// Four-octave trilinear value noise on a lattice of spacing `scale`.
struct NoiseTexture {
  uint64_t seed = 0;
  double scale = 1.0;
};
using Texture = std::variant<CheckerTexture, SinusoidTexture, NoiseTexture>;

// Deterministic procedural value in [0, 1] at a world point.
double EvaluateTexture(const Texture& texture, const Eigen::Vector3d& x);

struct Plane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit
  Texture texture;
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
  Texture texture;
};

using Primitive = std::variant<Plane, Sphere>;

struct Light {
  Eigen::Vector3d direction = Eigen::Vector3d(0.0, 0.0, -1.0);  // towards the light
  double ambient = 0.3;
};

struct SyntheticScene {
  std::vector<Primitive> primitives;
  Light light;
};

struct RenderOptions {
  int supersample = 3;  // per-axis sub-rays averaged for color
};

struct Rendering {
  Tensor image;     // H x W x 3
  Tensor gt_depth;  // H x W, camera-frame z, 0 where no primitive is hit
};

// Casts the ray through each pixel center for depth and a supersample^2 grid
// of sub-rays for Lambertian-shaded color. Background is black.
Rendering Render(const SyntheticScene& scene, const CameraView& cam, int height, int width,
                 const RenderOptions& options = {});

// Camera at `eye` looking at `target` with +y of the image pointing down and
// the world +y as the approximate down direction.
CameraView LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fx, double fy,
                  double cx, double cy, double d_min, double d_max);

// Scene description file, one item per line, '#' comments:
//   size <H> <W>
//   light <dx> <dy> <dz> <ambient>
//   plane <px> <py> <pz> <nx> <ny> <nz> <texture>
//   sphere <cx> <cy> <cz> <radius> <texture>
//   view <eye xyz> <target xyz> <fx> <fy> <cx> <cy> <d_min> <d_max>
// where <texture> is "checker <period>", "sinusoid <kx> <ky> <kz>" or
// "noise <seed> <scale>". Errors carry the line number.
struct SceneSpec {
  SyntheticScene scene;
  std::vector<CameraView> views;
  int height = 0;
  int width = 0;
};

SceneSpec ParseSceneSpec(const std::string& text);
SceneSpec ReadSceneSpec(const std::filesystem::path& path);

// Writes images/, cams/, depth_gt/, views.txt and gt_cloud.ply under `out_dir`.
void WriteDataset(const SceneSpec& spec, const std::filesystem::path& out_dir,
                  const RenderOptions& options = {});

// Unprojects every valid pixel of `depth` (step `stride`) to world points.
PointCloud DepthToCloud(const Tensor& depth, const CameraView& cam, int stride = 1);

}  // namespace mvsweep
