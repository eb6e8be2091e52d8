#include <cmath>

#include "doctest.h"
#include "mvsweep/fusion.h"
#include "mvsweep/synth.h"
#include "test_util.h"

using namespace mvsweep;

namespace {

const Eigen::Vector3d kPlanePoint(0, 0, 4);
const Eigen::Vector3d kPlaneNormal = Eigen::Vector3d(0.2, -0.1, -1).normalized();

// Five views of a slanted textured plane with exact depth and confidence 1.
std::vector<DepthView> PlaneViews(int h = 48, int w = 64) {
  SyntheticScene scene;
  scene.primitives.push_back(Plane{kPlanePoint, kPlaneNormal, NoiseTexture{3, 0.3}});
  std::vector<DepthView> views;
  const Eigen::Vector3d eyes[5] = {{0, 0, 0}, {0.4, 0, 0}, {-0.4, 0, 0}, {0, 0.3, 0}, {0, -0.3, 0}};
  for (const auto& eye : eyes) {
    CameraView cam = LookAt(eye, eye + Eigen::Vector3d(0, 0, 4), 60, 60, w / 2.0, h / 2.0, 1, 10);
    Rendering r = Render(scene, cam, h, w);
    cam.image = r.image;
    views.push_back({r.gt_depth, Tensor({h, w}, 1.0f), cam});
  }
  return views;
}

// Number of sources whose image contains the reprojection of the reference
// pixel's plane point.
int VisibleSources(const std::vector<DepthView>& views, int y, int x) {
  const Eigen::Vector3d X = Unproject(views[0].camera, {x + 0.5, y + 0.5}, views[0].depth.at(y, x));
  int n = 0;
  for (size_t s = 1; s < views.size(); ++s) {
    const auto p = Project(views[s].camera, X);
    const int h = views[s].depth.dim(0), w = views[s].depth.dim(1);
    if (p && p->pixel.x() >= 1 && p->pixel.x() <= w - 1 && p->pixel.y() >= 1 && p->pixel.y() <= h - 1) ++n;
  }
  return n;
}

std::span<const DepthView> Sources(const std::vector<DepthView>& v) {
  return std::span<const DepthView>(v).subspan(1);
}

}  // namespace

TEST_CASE("identical views are self-consistent") {
  auto views = PlaneViews();
  std::vector<DepthView> pair = {views[0], views[0]};
  FilterParams p;
  p.num_consistent = 1;
  const ConsistencyResult r = CheckConsistency(pair[0], Sources(pair), p);
  for (float v : r.mask.data()) CHECK(v == 1.0f);
  for (float v : r.support_count.data()) CHECK(v == 1.0f);

  pair[0].depth.at(10, 20) *= 1.2f;
  const ConsistencyResult bad = CheckConsistency(pair[0], Sources(pair), p);
  CHECK(bad.mask.at(10, 20) == 0.0f);
  CHECK(bad.support_count.at(10, 20) == 0.0f);
}

TEST_CASE("outlier fails against every view") {
  auto views = PlaneViews();
  views[0].depth.at(20, 30) *= 1.2f;
  const ConsistencyResult r = CheckConsistency(views[0], Sources(views), FilterParams{});
  CHECK(r.support_count.at(20, 30) == 0.0f);
  CHECK(r.mask.at(20, 30) == 0.0f);
}

TEST_CASE("exact depths pass where enough sources see the point") {
  const auto views = PlaneViews();
  const ConsistencyResult r = CheckConsistency(views[0], Sources(views), FilterParams{});
  int visible = 0, passed = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (VisibleSources(views, y, x) < 2) continue;
      ++visible;
      passed += r.mask.at(y, x) == 1.0f;
    }
  REQUIRE(visible > 1000);
  CHECK(passed >= 0.99 * visible);
}

TEST_CASE("confidence gate") {
  auto views = PlaneViews();
  views[0].confidence = Tensor({48, 64}, 0.4f);
  const ConsistencyResult r = CheckConsistency(views[0], Sources(views), FilterParams{});
  for (float v : r.mask.data()) CHECK(v == 0.0f);
}

TEST_CASE("masks are monotone in the thresholds") {
  auto views = PlaneViews();
  Xorshift64Star rng(14);
  for (auto& v : views) {
    for (float& d : v.depth.data()) d *= static_cast<float>(1.0 + rng.Uniform(-0.15, 0.15));
  }
  const FilterParams base;
  const Tensor m = CheckConsistency(views[0], Sources(views), base).mask;

  FilterParams loose = base;
  loose.disparity_threshold = 0.2;
  loose.reproj_threshold_px = 2.0;
  const Tensor ml = CheckConsistency(views[0], Sources(views), loose).mask;
  FilterParams strict = base;
  strict.num_consistent = 3;
  const Tensor ms = CheckConsistency(views[0], Sources(views), strict).mask;
  int diff = 0;
  for (size_t i = 0; i < m.size(); ++i) {
    CHECK(ml[i] >= m[i]);
    CHECK(ms[i] <= m[i]);
    diff += ml[i] != m[i];
  }
  CHECK(diff > 0);
}

TEST_CASE("dynamic mode") {
  auto views = PlaneViews();
  FilterParams p;
  p.mode = FilterMode::kDynamic;
  const ConsistencyResult r = CheckConsistency(views[0], Sources(views), p);
  // A pixel seen exactly by all four sources passes at the tightest level.
  int passed = 0, all_visible = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x)
      if (VisibleSources(views, y, x) == 4) {
        ++all_visible;
        passed += r.mask.at(y, x) == 1.0f;
      }
  CHECK(passed >= 0.99 * all_visible);

  // A 12% error only passes at level n = 4 (threshold 0.1), which needs all
  // four sources; with n <= 3 the relative threshold is at most 0.075.
  views[0].depth.at(24, 32) *= 1.12f;
  CHECK(CheckConsistency(views[0], Sources(views), p).mask.at(24, 32) == 0.0f);
  views[0].depth.at(24, 32) /= 1.12f;
  views[0].depth.at(24, 32) *= 1.05f;
  CHECK(CheckConsistency(views[0], Sources(views), p).mask.at(24, 32) == 1.0f);
}

TEST_CASE("filter parameter validation") {
  auto views = PlaneViews(16, 16);
  FilterParams p;
  p.num_consistent = 0;
  CHECK_THROWS_AS(CheckConsistency(views[0], Sources(views), p), std::invalid_argument);
  CHECK_THROWS_AS(CheckConsistency(views[0], std::span<const DepthView>{}, FilterParams{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(FuseToCloud(std::span<const DepthView>(views).first(1), FilterParams{}),
                  std::invalid_argument);
}

TEST_CASE("fused cloud lies on the plane") {
  const auto views = PlaneViews();
  const PointCloud cloud = FuseToCloud(views, FilterParams{});
  REQUIRE(cloud.size() > 1000);
  double worst = 0;
  for (const auto& p : cloud.points) {
    worst = std::max(worst, std::abs(kPlaneNormal.dot(p.cast<double>() - kPlanePoint)));
  }
  CHECK(worst < 1e-4);
  CHECK_NOTHROW(cloud.Validate());
}

TEST_CASE("fusion colors come from the reference image") {
  auto views = PlaneViews();
  for (auto& v : views) v.camera.image = Tensor({48, 64, 3}, 0.5f);
  views[0].camera.image = Tensor({48, 64, 3}, 1.0f);
  const PointCloud cloud = FuseToCloud(views, FilterParams{});
  REQUIRE(cloud.size() > 0);
  // View 0 is the first reference, so the first point is one of its pixels.
  CHECK(cloud.colors.front() == std::array<uint8_t, 3>{255, 255, 255});
  CHECK(cloud.colors.back() == std::array<uint8_t, 3>{128, 128, 128});
}

TEST_CASE("closed confidence gate gives an empty cloud") {
  auto views = PlaneViews();
  for (auto& v : views) v.confidence = Tensor({48, 64}, 0.2f);
  CHECK(FuseToCloud(views, FilterParams{}).size() == 0);
}

TEST_CASE("repeating the views does not double the cloud") {
  const auto views = PlaneViews();
  std::vector<DepthView> twice = views;
  twice.insert(twice.end(), views.begin(), views.end());
  const size_t once = FuseToCloud(views, FilterParams{}).size();
  const size_t doubled = FuseToCloud(twice, FilterParams{}).size();
  CHECK(doubled < 1.2 * once);
}

TEST_CASE("every point comes from a confident pixel") {
  auto views = PlaneViews();
  Xorshift64Star rng(15);
  for (auto& v : views) v.confidence = testing::RandomTensor(rng, {48, 64}, 0, 1);
  const FilterParams p;
  const PointCloud cloud = FuseToCloud(views, p);
  REQUIRE(cloud.size() > 0);
  for (const auto& pt : cloud.points) {
    bool found = false;
    for (const auto& v : views) {
      const auto proj = Project(v.camera, pt.cast<double>());
      if (!proj) continue;
      const int x = static_cast<int>(std::floor(proj->pixel.x()));
      const int y = static_cast<int>(std::floor(proj->pixel.y()));
      if (x < 0 || y < 0 || x >= 64 || y >= 48) continue;
      const Eigen::Vector2d center(x + 0.5, y + 0.5);
      if ((proj->pixel - center).norm() < 1e-2 && v.confidence.at(y, x) >= p.prob_threshold) {
        found = true;
      }
    }
    CHECK(found);
  }
}
