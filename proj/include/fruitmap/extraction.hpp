#pragma once

// Per-frame fruitlet extraction: turns instance masks + depth into filtered
// world-frame observations, and strips occluder contamination from clouds.

#include <array>
#include <cstddef>
#include <vector>

#include "fruitmap/geometry.hpp"

namespace fruitmap {

struct ExtractionConfig {
  int min_points = 50;
  double score_threshold = 0.5;
  bool occlusion_split_enabled = true;
  /// Minimum k-means centroid separation that marks a cloud as contaminated.
  double cluster_separation_mm = 25.0;
  int kmeans_iterations = 20;

  void validate() const;
};

struct FruitletObservation {
  int frame_id = 0;
  int instance = 0;
  PointCloud cloud;  // world frame
  Point3 camera_center = Point3::Zero();
  /// Unit world direction of the camera ray through the mask centroid.
  Point3 view_ray = Point3::UnitZ();
  double score = 1.0;
  /// Pixels carrying the instance label, with or without valid depth.
  std::size_t masked_pixels = 0;
};

/// One observation per fruitlet instance that passes the score and
/// point-count thresholds. Calyx and stem instances are ignored.
std::vector<FruitletObservation> filter_instances(const CameraFrame& frame, const ExtractionConfig& cfg);

struct TwoMeansResult {
  std::vector<int> assignment;  // 0 or 1 per point
  std::array<Point3, 2> centroids;
  std::array<std::size_t, 2> sizes{};
};

/// Lloyd's k-means with k = 2 seeded by the farthest pair of points.
/// Requires at least two points.
TwoMeansResult two_means(std::span<const Point3> points, int max_iterations);

/// Keeps the dominant k-means cluster when the two cluster centroids are
/// farther apart than cfg.cluster_separation_mm. Equal-size clusters are
/// resolved toward the one nearer the camera ray through the mask centroid.
FruitletObservation split_occlusion(const FruitletObservation& obs, const ExtractionConfig& cfg);

}  // namespace fruitmap
