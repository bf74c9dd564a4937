#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fruitmap/fruit_map.hpp"
#include "fruitmap/simulator.hpp"
#include "test_util.hpp"

using namespace fruitmap;

namespace {

constexpr double kPi = std::numbers::pi;

// Lens volume as the sum of the two spherical caps cut by the radical plane.
double cap_oracle(double R, double r, double d) {
  if (d >= R + r) return 0.0;
  if (d <= std::abs(R - r)) return 4.0 / 3.0 * kPi * std::pow(std::min(R, r), 3);
  const double x = (d * d + R * R - r * r) / (2.0 * d);  // plane offset from the big center
  const double h_big = R - x;
  const double h_small = r - (d - x);
  auto cap = [](double radius, double h) { return kPi * h * h * (3.0 * radius - h) / 3.0; };
  return cap(R, h_big) + cap(r, h_small);
}

MatchConfig threshold(double t) {
  MatchConfig c;
  c.merge_threshold = t;
  return c;
}

}  // namespace

TEST(IntersectionRatio, TrivialCases) {
  const Sphere a{{0, 0, 0}, 10};
  EXPECT_DOUBLE_EQ(intersection_ratio(a, a), 1.0);
  EXPECT_DOUBLE_EQ(intersection_ratio(a, Sphere{{20, 0, 0}, 10}), 0.0);
  EXPECT_DOUBLE_EQ(intersection_ratio(a, Sphere{{25, 0, 0}, 10}), 0.0);
  EXPECT_DOUBLE_EQ(intersection_ratio(a, Sphere{{3, 0, 0}, 5}), 1.0);
  EXPECT_DOUBLE_EQ(intersection_ratio(Sphere{{0, 0, 0}, 12}, Sphere{{30, 0, 0}, 12}), 0.0);
}

TEST(IntersectionRatio, UnitSpheresAtUnitDistanceIsFiveSixteenths) {
  const Sphere a{{0, 0, 0}, 1}, b{{1, 0, 0}, 1};
  EXPECT_NEAR(lens_volume(a, b), 5.0 * kPi / 12.0, 1e-12);
  EXPECT_NEAR(intersection_ratio(a, b), 5.0 / 16.0, 1e-12);
}

TEST(IntersectionRatio, MonteCarloVolumeOracle) {
  // Sample the smaller sphere's bounding cube; fraction of in-sphere samples
  // that also fall in the other sphere estimates the ratio.
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Sphere a{{0, 0, 0}, 1}, b{{1, 0, 0}, 1};
  std::size_t in_small = 0, in_both = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    if (p.squaredNorm() > 1.0) continue;
    ++in_small;
    if ((p - b.center).squaredNorm() <= 1.0) ++in_both;
  }
  const double mc = static_cast<double>(in_both) / static_cast<double>(in_small);
  EXPECT_NEAR(intersection_ratio(a, b), mc, 0.003);
}

TEST(IntersectionRatio, MatchesSphericalCapOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rad(3.0, 40.0), frac(0.0, 1.2);
  for (int i = 0; i < 2000; ++i) {
    const double R = rad(rng), r = rad(rng);
    const double d = frac(rng) * (R + r);
    const Point3 dir = testutil::random_unit(rng);
    const Sphere a{Point3(1, 2, 3), R}, b{Point3(1, 2, 3) + d * dir, r};
    const double expected = cap_oracle(std::max(R, r), std::min(R, r), d);
    ASSERT_NEAR(lens_volume(a, b), expected, 1e-9 * std::max(1.0, expected)) << R << " " << r << " " << d;
  }
}

TEST(IntersectionRatio, SymmetricBoundedAndContinuous) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> rad(3.0, 40.0), frac(0.0, 1.5);
  for (int i = 0; i < 2000; ++i) {
    const Sphere a{testutil::random_point(rng, 50.0), rad(rng)};
    const Sphere b{testutil::random_point(rng, 50.0), rad(rng)};
    const double ab = intersection_ratio(a, b), ba = intersection_ratio(b, a);
    ASSERT_EQ(ab, ba);
    ASSERT_GE(ab, 0.0);
    ASSERT_LE(ab, 1.0);
  }
  for (const auto& [R, r] : std::vector<std::pair<double, double>>{{10, 10}, {15, 7}, {40, 5}, {12.5, 12}}) {
    const Sphere big{{0, 0, 0}, R};
    const double outer = R + r, inner = R - r;
    const double eps = 1e-7;
    EXPECT_NEAR(intersection_ratio(big, Sphere{{outer - eps, 0, 0}, r}), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(intersection_ratio(big, Sphere{{outer, 0, 0}, r}), 0.0);
    if (inner > 0.0) {
      EXPECT_NEAR(intersection_ratio(big, Sphere{{inner + eps, 0, 0}, r}), 1.0, 1e-9);
      EXPECT_DOUBLE_EQ(intersection_ratio(big, Sphere{{inner, 0, 0}, r}), 1.0);
    }
  }
}

TEST(Register, EmptyMapCreatesTrackZero) {
  FruitletMap m;
  const auto out = m.register_sphere({{0, 0, 400}, 12}, 0, MatchConfig{});
  EXPECT_FALSE(out.merged);
  EXPECT_EQ(out.track_id, 0);
  ASSERT_EQ(m.count(), 1u);
  EXPECT_EQ(m.tracks()[0].observations, 1);
  EXPECT_EQ(count(FruitletMap{}), 0u);
}

TEST(Register, IdenticalSphereMerges) {
  FruitletMap m;
  m.register_sphere({{0, 0, 400}, 12}, 0, MatchConfig{});
  const auto out = m.register_sphere({{0, 0, 400}, 12}, 4, MatchConfig{});
  EXPECT_TRUE(out.merged);
  EXPECT_DOUBLE_EQ(out.best_ratio, 1.0);
  ASSERT_EQ(m.count(), 1u);
  EXPECT_EQ(m.tracks()[0].observations, 2);
  EXPECT_EQ(m.tracks()[0].last_frame, 4);
}

TEST(Register, DistantSpheresStaySeparate) {
  FruitletMap m;
  m.register_sphere({{0, 0, 400}, 12}, 0, MatchConfig{});
  m.register_sphere({{30, 0, 400}, 12}, 1, MatchConfig{});
  EXPECT_EQ(m.count(), 2u);
  EXPECT_EQ(m.tracks()[1].id, 1);
}

TEST(Register, PairwiseAndWeightedAverages) {
  FruitletMap m;
  m.register_sphere({{0, 0, 0}, 10}, 0, MatchConfig{});
  m.register_sphere({{2, 0, 0}, 12}, 1, MatchConfig{});
  m.register_sphere({{4, 0, 0}, 10}, 2, MatchConfig{});
  // Pairwise: ((0 + 2) / 2 + 4) / 2 = 2.5
  EXPECT_DOUBLE_EQ(m.tracks()[0].sphere.center.x(), 2.5);
  EXPECT_DOUBLE_EQ(m.tracks()[0].sphere.radius, 10.5);

  MatchConfig weighted;
  weighted.weighted_average = true;
  FruitletMap w;
  w.register_sphere({{0, 0, 0}, 10}, 0, weighted);
  w.register_sphere({{2, 0, 0}, 12}, 1, weighted);
  w.register_sphere({{4, 0, 0}, 10}, 2, weighted);
  EXPECT_DOUBLE_EQ(w.tracks()[0].sphere.center.x(), 2.0);
  EXPECT_NEAR(w.tracks()[0].sphere.radius, 32.0 / 3.0, 1e-12);
}

TEST(Register, BestRatioWinsAndTiesGoToLowestId) {
  FruitletMap m;
  m.register_sphere({{-10, 0, 0}, 10}, 0, MatchConfig{});
  m.register_sphere({{10, 0, 0}, 10}, 0, MatchConfig{});
  ASSERT_EQ(m.count(), 2u);
  // Equidistant from both tracks.
  auto out = m.register_sphere({{0, 0, 0}, 10}, 1, threshold(0.3));
  EXPECT_TRUE(out.merged);
  EXPECT_EQ(out.track_id, 0);
  EXPECT_EQ(m.tracks()[1].observations, 1);
  // Closer to track 1 now.
  out = m.register_sphere({{9, 0, 0}, 10}, 2, threshold(0.3));
  EXPECT_EQ(out.track_id, 1);
}

TEST(Register, FrameWindowLimitsCandidates) {
  MatchConfig cfg;
  cfg.frame_window = 5;
  FruitletMap m;
  m.register_sphere({{0, 0, 0}, 10}, 0, cfg);
  EXPECT_TRUE(m.register_sphere({{0, 0, 0}, 10}, 5, cfg).merged);
  EXPECT_FALSE(m.register_sphere({{0, 0, 0}, 10}, 11, cfg).merged);
  EXPECT_EQ(m.count(), 2u);
}

TEST(Register, ObservationsAndIdsNeverDecrease) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> rad(8.0, 18.0);
  FruitletMap m;
  for (int i = 0; i < 500; ++i) {
    const auto before = m.tracks();
    m.register_sphere({testutil::random_point(rng, 80.0), rad(rng)}, i, MatchConfig{});
    ASSERT_GE(m.count(), before.size());
    for (std::size_t k = 0; k < before.size(); ++k) {
      ASSERT_EQ(m.tracks()[k].id, before[k].id);
      ASSERT_GE(m.tracks()[k].observations, before[k].observations);
    }
    for (std::size_t k = 1; k < m.count(); ++k) ASSERT_LT(m.tracks()[k - 1].id, m.tracks()[k].id);
  }
  EXPECT_EQ(m.next_id(), static_cast<int>(m.count()));
}

TEST(Register, DisjointSpheresCountEachOnce) {
  FruitletMap m;
  for (int i = 0; i < 25; ++i) m.register_sphere({{40.0 * i, 0, 0}, 12}, i, MatchConfig{});
  EXPECT_EQ(count(m), 25u);
}

TEST(Replay, MonotoneInMergeThreshold) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> jitter(0.0, 2.0);
  std::vector<RecordedSphere> stream;
  std::vector<Sphere> truth;
  for (int i = 0; i < 30; ++i) truth.push_back({Point3(30.0 * i, 0, 0), 10.0 + (i % 5)});
  for (int frame = 0; frame < 20; ++frame) {
    for (int i = 0; i < 30; ++i) {
      RecordedSphere r;
      r.frame_id = frame;
      r.instance = i + 1;
      r.fit.sphere = {truth[static_cast<std::size_t>(i)].center + Point3(jitter(rng), jitter(rng), jitter(rng)),
                      truth[static_cast<std::size_t>(i)].radius + jitter(rng) * 0.5};
      stream.push_back(r);
    }
  }
  std::size_t prev = 0;
  for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto n = replay(stream, threshold(t)).count();
    EXPECT_GE(n, prev) << t;
    prev = n;
  }
}

TEST(ProcessScan, Errors) {
  EXPECT_THROW(process_scan({}, ScanConfig{}), InvalidArgument);
  CameraFrame a, b;
  a.frame_id = 2;
  b.frame_id = 1;
  a.depth = b.depth = DepthImage(640, 480);
  a.masks = b.masks = MaskImage(640, 480);
  EXPECT_THROW(process_scan({a, b}, ScanConfig{}), InvalidArgument);
  b.frame_id = 3;
  const auto r = process_scan({a, b}, ScanConfig{});
  EXPECT_EQ(r.map.count(), 0u);
  EXPECT_EQ(r.stats.frames, 2u);
}

TEST(ProcessScan, NoiseFreeScanCountsEveryVisibleFruitlet) {
  sim::SimulationConfig cfg;
  cfg.scene.seed = 3;
  cfg.scene.fruitlet_count = 12;
  cfg.scene.leaf_count = 6;
  cfg.trajectory.arcs = 2;
  const auto scan = sim::simulate_scan(cfg);
  const auto result = process_scan(scan.frames, ScanConfig{}, scan.scan_id);
  const std::size_t visible = scan.truth.size() - sim::never_visible_count(scan.truth, 50);
  EXPECT_EQ(result.map.count(), visible);
  EXPECT_EQ(result.stats.fit_failures, 0u);
  EXPECT_EQ(result.stats.observations, result.stream.size());
  EXPECT_EQ(result.stats.new_tracks + result.stats.merges, result.stats.observations);

  const auto again = process_scan(scan.frames, ScanConfig{}, scan.scan_id);
  ASSERT_EQ(again.map.count(), result.map.count());
  for (std::size_t i = 0; i < result.map.count(); ++i) {
    EXPECT_EQ(again.map.tracks()[i].sphere, result.map.tracks()[i].sphere);
  }
  EXPECT_EQ(replay(result.stream, MatchConfig{}).count(), result.map.count());
}

TEST(ObservationSeed, DependsOnEveryField) {
  const auto base = observation_seed(1, "scan", 2, 3);
  EXPECT_EQ(base, observation_seed(1, "scan", 2, 3));
  EXPECT_NE(base, observation_seed(2, "scan", 2, 3));
  EXPECT_NE(base, observation_seed(1, "scan2", 2, 3));
  EXPECT_NE(base, observation_seed(1, "scan", 3, 3));
  EXPECT_NE(base, observation_seed(1, "scan", 2, 4));
}
