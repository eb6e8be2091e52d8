#include <cmath>

#include "doctest.h"
#include "mvsweep/metrics.h"
#include "test_util.h"

using namespace mvsweep;

namespace {

PointCloud Cloud(std::vector<Eigen::Vector3f> pts) {
  PointCloud c;
  c.colors.assign(pts.size(), {0, 0, 0});
  c.points = std::move(pts);
  return c;
}

double BruteNearest(const std::vector<Eigen::Vector3f>& pts, const Eigen::Vector3d& q) {
  double best = 1e300;
  for (const auto& p : pts) best = std::min(best, (p.cast<double>() - q).norm());
  return best;
}

PointCloud RandomCloud(Xorshift64Star& rng, int n, double spread) {
  std::vector<Eigen::Vector3f> pts;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(rng.Uniform(-spread, spread), rng.Uniform(-spread, spread), rng.Uniform(0, spread));
  }
  return Cloud(pts);
}

}  // namespace

TEST_CASE("depth error ratio examples") {
  const Tensor gt({1, 3}, std::vector<float>{10, 10, 10});
  const auto perfect = ComputeDepthErrorRatios(gt, gt);
  CHECK(perfect.e == std::array<double, 3>{0, 0, 0});
  CHECK(perfect.valid == 3);

  const Tensor pred({1, 3}, std::vector<float>{11, 13, 15});
  const auto r = ComputeDepthErrorRatios(pred, gt);
  CHECK(r.e[0] == 2.0 / 3.0);
  CHECK(r.e[1] == 1.0 / 3.0);
  CHECK(r.e[2] == 0.0);
}

TEST_CASE("depth errors skip invalid ground truth") {
  const Tensor gt({1, 4}, std::vector<float>{0, 5, std::nanf(""), 5});
  const Tensor pred({1, 4}, std::vector<float>{100, 5, 100, 8});
  const auto r = ComputeDepthErrorRatios(pred, gt);
  CHECK(r.valid == 2);
  CHECK(r.e[0] == 0.5);
  CHECK(r.e[2] == 0.0);
  CHECK_THROWS_AS(ComputeDepthErrorRatios(pred, Tensor({1, 4})), std::invalid_argument);
  CHECK_THROWS_AS(ComputeDepthErrorRatios(Tensor({2, 2}), gt), std::invalid_argument);
}

TEST_CASE("depth error counts accumulate") {
  DepthErrorCounts a = CountDepthErrors(Tensor({1, 2}, std::vector<float>{1, 9}), Tensor({1, 2}, 1.0f));
  a += CountDepthErrors(Tensor({1, 1}, 4.0f), Tensor({1, 1}, 1.0f));
  CHECK(a.valid == 3);
  const auto r = ToRatios(a);
  CHECK(r.e[0] == 2.0 / 3.0);
  CHECK(r.e[1] == 1.0 / 3.0);
  CHECK(r.e[2] == 0.0);
  CHECK_THROWS_AS(ToRatios(DepthErrorCounts{}), std::invalid_argument);
}

TEST_CASE("depth error ratio properties") {
  Xorshift64Star rng(18);
  for (int i = 0; i < 100; ++i) {
    const Tensor gt = testing::RandomTensor(rng, {6, 7}, 1, 50);
    const Tensor pred = testing::RandomTensor(rng, {6, 7}, 1, 50);
    const auto r = ComputeDepthErrorRatios(pred, gt);
    CHECK(r.e[0] >= r.e[1]);
    CHECK(r.e[1] >= r.e[2]);
    // Shift by an exactly representable constant.
    Tensor gs = gt, ps = pred;
    for (float& v : gs.data()) v += 64.0f;
    for (float& v : ps.data()) v += 64.0f;
    const auto s = ComputeDepthErrorRatios(ps, gs);
    CHECK(s.e == r.e);
  }
}

TEST_CASE("cloud metric examples") {
  const PointCloud a = Cloud({{0, 0, 0}, {1, 2, 3}});
  const CloudMetrics same = ComputeCloudMetrics(a, a);
  CHECK(same.acc == 0.0);
  CHECK(same.comp == 0.0);
  CHECK(same.overall == 0.0);

  const CloudMetrics unit = ComputeCloudMetrics(Cloud({{0, 0, 1}}), Cloud({{0, 0, 0}}));
  CHECK(unit.acc == 1.0);
  CHECK(unit.comp == 1.0);
  CHECK(unit.overall == 1.0);

  Xorshift64Star rng(19);
  const PointCloud gt = RandomCloud(rng, 200, 2);
  const PointCloud pred = RandomCloud(rng, 150, 2);
  const CloudMetrics base = ComputeCloudMetrics(pred, gt);
  PointCloud outlier = pred;
  outlier.points.push_back({500, 500, 500});
  outlier.colors.push_back({0, 0, 0});
  const CloudMetrics with = ComputeCloudMetrics(outlier, gt);
  const double n = static_cast<double>(outlier.size());
  CHECK(with.acc == doctest::Approx(base.acc * (n - 1) / n + kDefaultDistanceClamp / n).epsilon(1e-12));
  CHECK(with.comp == base.comp);
}

TEST_CASE("cloud metric properties") {
  Xorshift64Star rng(20);
  for (int i = 0; i < 100; ++i) {
    const PointCloud a = RandomCloud(rng, 1 + static_cast<int>(rng.Below(60)), rng.Uniform(0.5, 30));
    const PointCloud b = RandomCloud(rng, 1 + static_cast<int>(rng.Below(60)), rng.Uniform(0.5, 30));
    const CloudMetrics ab = ComputeCloudMetrics(a, b);
    const CloudMetrics ba = ComputeCloudMetrics(b, a);
    CHECK(ab.acc == ba.comp);
    CHECK(ab.comp == ba.acc);
    CHECK(ab.overall == ba.overall);
    CHECK(ab.overall == doctest::Approx((ab.acc + ab.comp) / 2));
    double acc = 0;
    for (const auto& p : a.points) acc += std::min(BruteNearest(b.points, p.cast<double>()), 20.0);
    CHECK(ab.acc == doctest::Approx(acc / a.size()).epsilon(1e-9));
  }
}

TEST_CASE("grid index matches brute force") {
  Xorshift64Star rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Eigen::Vector3f> pts;
    for (int i = 0; i < 2000; ++i) {
      // Clustered points stress the uniform grid.
      const double s = i % 3 == 0 ? 0.01 : 10;
      pts.emplace_back(rng.Uniform(-s, s), rng.Uniform(-s, s), rng.Uniform(-s, s));
    }
    const PointIndex index(pts);
    for (int q = 0; q < 300; ++q) {
      const Eigen::Vector3d x(rng.Uniform(-15, 15), rng.Uniform(-15, 15), rng.Uniform(-15, 15));
      const double brute = BruteNearest(pts, x);
      CHECK(index.NearestDistance(x, 1e9) == doctest::Approx(brute).epsilon(1e-12));
      CHECK(index.NearestDistance(x, 0.5) == doctest::Approx(std::min(brute, 0.5)).epsilon(1e-12));
    }
  }
}

TEST_CASE("cloud metric errors") {
  const PointCloud a = Cloud({{0, 0, 0}});
  CHECK_THROWS_AS(ComputeCloudMetrics(a, PointCloud{}), std::invalid_argument);
  CHECK_THROWS_AS(ComputeCloudMetrics(PointCloud{}, a), std::invalid_argument);
  CHECK_THROWS_AS(ComputeCloudMetrics(a, a, 0.0), std::invalid_argument);
}
