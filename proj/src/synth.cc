#include "mvsweep/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace mvsweep {

namespace {

uint64_t Mix(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double LatticeValue(uint64_t seed, int64_t x, int64_t y, int64_t z) {
  uint64_t h = Mix(seed);
  h = Mix(h ^ static_cast<uint64_t>(x));
  h = Mix(h ^ static_cast<uint64_t>(y));
  h = Mix(h ^ static_cast<uint64_t>(z));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double ValueNoise(uint64_t seed, const Eigen::Vector3d& p) {
  const Eigen::Vector3d f = p.array().floor();
  const Eigen::Vector3d r = p - f;
  const Eigen::Vector3d s = r.array() * r.array() * (3.0 - 2.0 * r.array());
  const auto ix = static_cast<int64_t>(f.x());
  const auto iy = static_cast<int64_t>(f.y());
  const auto iz = static_cast<int64_t>(f.z());
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const double w = (dx ? s.x() : 1 - s.x()) * (dy ? s.y() : 1 - s.y()) * (dz ? s.z() : 1 - s.z());
        acc += w * LatticeValue(seed, ix + dx, iy + dy, iz + dz);
      }
    }
  }
  return acc;
}

struct Hit {
  double depth = std::numeric_limits<double>::infinity();  // ray parameter == camera z
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
  const Texture* texture = nullptr;
};

void Intersect(const Primitive& prim, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
               Hit* best) {
  constexpr double kMinDepth = 1e-9;
  if (const auto* plane = std::get_if<Plane>(&prim)) {
    const double denom = plane->normal.dot(dir);
    if (std::abs(denom) < 1e-15) return;
    const double s = plane->normal.dot(plane->point - origin) / denom;
    if (s > kMinDepth && s < best->depth) {
      *best = {s, origin + s * dir, plane->normal, &plane->texture};
    }
    return;
  }
  const auto& sphere = std::get<Sphere>(prim);
  const Eigen::Vector3d oc = origin - sphere.center;
  const double a = dir.squaredNorm();
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return;
  const double sq = std::sqrt(disc);
  for (double s : {(-b - sq) / a, (-b + sq) / a}) {
    if (s > kMinDepth) {
      if (s < best->depth) {
        const Eigen::Vector3d x = origin + s * dir;
        *best = {s, x, (x - sphere.center) / sphere.radius, &sphere.texture};
      }
      return;
    }
  }
}

Hit CastRay(const SyntheticScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  Hit best;
  for (const auto& prim : scene.primitives) Intersect(prim, origin, dir, &best);
  return best;
}

double Shade(const SyntheticScene& scene, const Hit& hit) {
  const Eigen::Vector3d l = scene.light.direction.normalized();
  const double lambert = std::max(0.0, hit.normal.dot(l));
  const double a = scene.light.ambient;
  return (a + (1.0 - a) * lambert) * EvaluateTexture(*hit.texture, hit.point);
}

}  // namespace

double EvaluateTexture(const Texture& texture, const Eigen::Vector3d& x) {
  if (const auto* checker = std::get_if<CheckerTexture>(&texture)) {
    const auto cell = (x / checker->period).array().floor();
    const auto parity = static_cast<int64_t>(cell.x() + cell.y() + cell.z());
    return (parity & 1) ? 0.8 : 0.2;
  }
  if (const auto* sine = std::get_if<SinusoidTexture>(&texture)) {
    return 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * sine->wave.dot(x));
  }
  const auto& noise = std::get<NoiseTexture>(texture);
  double sum = 0.0;
  double amp = 1.0;
  double norm = 0.0;
  Eigen::Vector3d p = x / noise.scale;
  for (int octave = 0; octave < 4; ++octave) {
    sum += amp * ValueNoise(noise.seed + static_cast<uint64_t>(octave), p);
    norm += amp;
    amp *= 0.5;
    p *= 2.0;
  }
  return std::clamp(sum / norm, 0.0, 1.0);
}

Rendering Render(const SyntheticScene& scene, const CameraView& cam, int height, int width,
                 const RenderOptions& options) {
  if (height <= 0 || width <= 0 || options.supersample < 1) {
    throw std::invalid_argument("render size and supersampling must be positive");
  }
  Rendering out{Tensor({height, width, 3}), Tensor({height, width})};
  const Eigen::Matrix3d back = cam.R.transpose() * cam.K.inverse();
  const Eigen::Vector3d origin = cam.Center();
  const int ss = options.supersample;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Hit center = CastRay(scene, origin, back * Eigen::Vector3d(x + 0.5, y + 0.5, 1.0));
      if (center.texture) out.gt_depth.at(y, x) = static_cast<float>(center.depth);
      double value = 0.0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const Eigen::Vector3d pix(x + (sx + 0.5) / ss, y + (sy + 0.5) / ss, 1.0);
          const Hit hit = CastRay(scene, origin, back * pix);
          if (hit.texture) value += Shade(scene, hit);
        }
      }
      const float v = static_cast<float>(value / (ss * ss));
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = v;
    }
  }
  return out;
}

CameraView LookAt(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fx, double fy,
                  double cx, double cy, double d_min, double d_max) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d down = Eigen::Vector3d::UnitY();
  Eigen::Vector3d right = down.cross(forward);
  if (right.norm() < 1e-9) throw std::invalid_argument("look-at direction is parallel to +y");
  right.normalize();
  const Eigen::Vector3d cam_down = forward.cross(right);
  CameraView view;
  view.R.row(0) = right;
  view.R.row(1) = cam_down;
  view.R.row(2) = forward;
  view.t = -view.R * eye;
  view.K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  view.d_min = d_min;
  view.d_max = d_max;
  view.Validate();
  return view;
}

namespace {

[[noreturn]] void SpecError(int line, const std::string& msg) {
  throw std::invalid_argument("scene spec line " + std::to_string(line) + ": " + msg);
}

std::vector<double> Numbers(std::istringstream& in, size_t count, int line, const char* what) {
  std::vector<double> v(count);
  for (size_t i = 0; i < count; ++i) {
    std::string tok;
    if (!(in >> tok)) SpecError(line, std::string(what) + " expects " + std::to_string(count) + " numbers");
    char* end = nullptr;
    v[i] = std::strtod(tok.c_str(), &end);
    if (*end != '\0' || !std::isfinite(v[i])) SpecError(line, "bad number '" + tok + "'");
  }
  return v;
}

Texture ParseTexture(std::istringstream& in, int line) {
  std::string kind;
  if (!(in >> kind)) SpecError(line, "missing texture");
  if (kind == "checker") {
    const auto v = Numbers(in, 1, line, "checker");
    if (!(v[0] > 0)) SpecError(line, "checker period must be positive");
    return CheckerTexture{v[0]};
  }
  if (kind == "sinusoid") {
    const auto v = Numbers(in, 3, line, "sinusoid");
    return SinusoidTexture{Eigen::Vector3d(v[0], v[1], v[2])};
  }
  if (kind == "noise") {
    const auto v = Numbers(in, 2, line, "noise");
    if (v[0] < 0 || !(v[1] > 0)) SpecError(line, "noise needs a seed >= 0 and a positive scale");
    return NoiseTexture{static_cast<uint64_t>(v[0]), v[1]};
  }
  SpecError(line, "unknown texture '" + kind + "'");
}

}  // namespace

SceneSpec ParseSceneSpec(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "size") {
      const auto v = Numbers(ls, 2, line, "size");
      spec.height = static_cast<int>(v[0]);
      spec.width = static_cast<int>(v[1]);
      if (spec.height <= 0 || spec.width <= 0) SpecError(line, "size must be positive");
    } else if (kw == "light") {
      const auto v = Numbers(ls, 4, line, "light");
      spec.scene.light.direction = Eigen::Vector3d(v[0], v[1], v[2]);
      spec.scene.light.ambient = v[3];
      if (spec.scene.light.direction.norm() == 0.0 || v[3] < 0.0 || v[3] > 1.0) {
        SpecError(line, "light needs a non-zero direction and ambient in [0, 1]");
      }
    } else if (kw == "plane") {
      const auto v = Numbers(ls, 6, line, "plane");
      Plane p;
      p.point = Eigen::Vector3d(v[0], v[1], v[2]);
      p.normal = Eigen::Vector3d(v[3], v[4], v[5]);
      if (p.normal.norm() == 0.0) SpecError(line, "plane normal is zero");
      p.normal.normalize();
      p.texture = ParseTexture(ls, line);
      spec.scene.primitives.emplace_back(p);
    } else if (kw == "sphere") {
      const auto v = Numbers(ls, 4, line, "sphere");
      if (!(v[3] > 0)) SpecError(line, "sphere radius must be positive");
      spec.scene.primitives.emplace_back(
          Sphere{Eigen::Vector3d(v[0], v[1], v[2]), v[3], ParseTexture(ls, line)});
    } else if (kw == "view") {
      const auto v = Numbers(ls, 12, line, "view");
      try {
        spec.views.push_back(LookAt(Eigen::Vector3d(v[0], v[1], v[2]),
                                    Eigen::Vector3d(v[3], v[4], v[5]), v[6], v[7], v[8], v[9],
                                    v[10], v[11]));
      } catch (const std::invalid_argument& e) {
        SpecError(line, e.what());
      }
    } else {
      SpecError(line, "unknown keyword '" + kw + "'");
    }
    std::string extra;
    if (ls >> extra) SpecError(line, "unexpected token '" + extra + "'");
  }
  if (spec.height == 0) SpecError(line, "missing 'size' line");
  if (spec.views.empty()) SpecError(line, "no 'view' lines");
  return spec;
}

SceneSpec ReadSceneSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrc::kOpenFailed, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSceneSpec(ss.str());
}

PointCloud DepthToCloud(const Tensor& depth, const CameraView& cam, int stride) {
  PointCloud cloud;
  for (int y = 0; y < depth.dim(0); y += stride) {
    for (int x = 0; x < depth.dim(1); x += stride) {
      const float d = depth.at(y, x);
      if (!(d > 0.0f)) continue;
      cloud.points.push_back(Unproject(cam, Eigen::Vector2d(x + 0.5, y + 0.5), d).cast<float>());
      std::array<uint8_t, 3> color = {255, 255, 255};
      if (!cam.image.empty()) {
        for (int c = 0; c < 3; ++c) {
          color[c] = static_cast<uint8_t>(std::lround(std::clamp(cam.image.at(y, x, c), 0.0f, 1.0f) * 255.0f));
        }
      }
      cloud.colors.push_back(color);
    }
  }
  return cloud;
}

void WriteDataset(const SceneSpec& spec, const std::filesystem::path& out_dir,
                  const RenderOptions& options) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "cams");
  fs::create_directories(out_dir / "depth_gt");
  std::ofstream list(out_dir / "views.txt");
  if (!list) throw IoError(IoErrc::kOpenFailed, (out_dir / "views.txt").string());
  PointCloud gt_cloud;
  for (size_t v = 0; v < spec.views.size(); ++v) {
    char id[16];
    std::snprintf(id, sizeof(id), "%08zu", v);
    CameraView cam = spec.views[v];
    const Rendering r = Render(spec.scene, cam, spec.height, spec.width, options);
    cam.image = r.image;
    WritePpm(r.image, out_dir / "images" / (std::string(id) + ".ppm"));
    WriteCam(ToCameraFile(cam, 32), out_dir / "cams" / (std::string(id) + "_cam.txt"));
    WritePfm(r.gt_depth, out_dir / "depth_gt" / (std::string(id) + ".pfm"));
    list << id << '\n';
    const PointCloud part = DepthToCloud(r.gt_depth, cam, 2);
    gt_cloud.points.insert(gt_cloud.points.end(), part.points.begin(), part.points.end());
    gt_cloud.colors.insert(gt_cloud.colors.end(), part.colors.begin(), part.colors.end());
  }
  WritePly(gt_cloud, out_dir / "gt_cloud.ply");
}

}  // namespace mvsweep
