#include "fruitmap/extraction.hpp"

#include <limits>

namespace fruitmap {

void ExtractionConfig::validate() const {
  if (min_points < 4) throw InvalidArgument("min_points must be >= 4");
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) {
    throw InvalidArgument("score_threshold must be in [0,1]");
  }
  if (!(cluster_separation_mm > 0.0)) throw InvalidArgument("cluster_separation_mm must be > 0");
  if (kmeans_iterations < 1) throw InvalidArgument("kmeans_iterations must be >= 1");
}

std::vector<FruitletObservation> filter_instances(const CameraFrame& frame, const ExtractionConfig& cfg) {
  cfg.validate();
  const auto& masks = frame.masks;
  const int k = masks.instance_count();

  // Single pass over the mask for per-instance pixel counts and centroids.
  std::vector<std::size_t> pixels(static_cast<std::size_t>(k) + 1, 0);
  std::vector<Eigen::Vector2d> pixel_sum(static_cast<std::size_t>(k) + 1, Eigen::Vector2d::Zero());
  for (int v = 0; v < masks.height(); ++v) {
    for (int u = 0; u < masks.width(); ++u) {
      const auto label = masks.at(u, v);
      if (label == 0 || label > k) continue;
      ++pixels[label];
      pixel_sum[label] += Eigen::Vector2d(u, v);
    }
  }

  std::vector<FruitletObservation> out;
  for (int label = 1; label <= k; ++label) {
    const auto& info = masks.instance(label);
    if (info.cls != InstanceClass::kFruitlet || info.score < cfg.score_threshold) continue;
    const auto count = pixels[static_cast<std::size_t>(label)];
    if (count < static_cast<std::size_t>(cfg.min_points)) continue;

    PointCloud cam = backproject(frame.depth, frame.intrinsics, masks, label);
    if (cam.size() < static_cast<std::size_t>(cfg.min_points)) continue;

    FruitletObservation obs;
    obs.frame_id = frame.frame_id;
    obs.instance = label;
    obs.cloud = to_world(cam, frame.pose);
    obs.camera_center = frame.pose.translation();
    const Eigen::Vector2d uv = pixel_sum[static_cast<std::size_t>(label)] / static_cast<double>(count);
    obs.view_ray = (frame.pose.rotation() * frame.intrinsics.ray(uv.x(), uv.y())).normalized();
    obs.score = info.score;
    obs.masked_pixels = count;
    out.push_back(std::move(obs));
  }
  return out;
}

TwoMeansResult two_means(std::span<const Point3> points, int max_iterations) {
  const auto n = points.size();
  if (n < 2) throw InvalidArgument("two_means needs at least two points");

  std::size_t a = 0;
  std::size_t b = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (points[i] - points[j]).squaredNorm();
      if (d > best) {
        best = d;
        a = i;
        b = j;
      }
    }
  }

  TwoMeansResult r;
  r.centroids = {points[a], points[b]};
  r.assignment.assign(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = (points[i] - r.centroids[1]).squaredNorm() < (points[i] - r.centroids[0]).squaredNorm() ? 1 : 0;
      if (c != r.assignment[i]) {
        r.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::array<Point3, 2> sum = {Point3::Zero(), Point3::Zero()};
    std::array<std::size_t, 2> count{};
    for (std::size_t i = 0; i < n; ++i) {
      sum[r.assignment[i]] += points[i];
      ++count[r.assignment[i]];
    }
    for (int c = 0; c < 2; ++c) {
      if (count[c] > 0) r.centroids[c] = sum[c] / static_cast<double>(count[c]);
    }
  }
  r.sizes = {0, 0};
  for (int c : r.assignment) ++r.sizes[c];
  return r;
}

namespace {

double distance_to_ray(const Point3& p, const Point3& origin, const Point3& unit_dir) {
  const Point3 d = p - origin;
  return (d - d.dot(unit_dir) * unit_dir).norm();
}

}  // namespace

FruitletObservation split_occlusion(const FruitletObservation& obs, const ExtractionConfig& cfg) {
  if (!cfg.occlusion_split_enabled) return obs;
  if (obs.cloud.size() < 2 * static_cast<std::size_t>(cfg.min_points)) return obs;

  const TwoMeansResult km = two_means(obs.cloud.points, cfg.kmeans_iterations);
  if (km.sizes[0] == 0 || km.sizes[1] == 0) return obs;
  if ((km.centroids[0] - km.centroids[1]).norm() <= cfg.cluster_separation_mm) return obs;

  int keep = km.sizes[1] > km.sizes[0] ? 1 : 0;
  if (km.sizes[0] == km.sizes[1]) {
    const double d0 = distance_to_ray(km.centroids[0], obs.camera_center, obs.view_ray);
    const double d1 = distance_to_ray(km.centroids[1], obs.camera_center, obs.view_ray);
    keep = d1 < d0 ? 1 : 0;
  }

  FruitletObservation out = obs;
  out.cloud.points.clear();
  out.cloud.points.reserve(km.sizes[keep]);
  for (std::size_t i = 0; i < obs.cloud.size(); ++i) {
    if (km.assignment[i] == keep) out.cloud.points.push_back(obs.cloud.points[i]);
  }
  return out;
}

}  // namespace fruitmap
