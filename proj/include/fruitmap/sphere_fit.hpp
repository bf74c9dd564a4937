#pragma once

// Sphere models for fruitlet point clouds: minimal 4-point solver, RANSAC,
// linear least squares and the view-direction correction for centers that
// land on the camera side of the observed surface.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "fruitmap/geometry.hpp"

namespace fruitmap {

struct FruitletObservation;

struct Sphere {
  Point3 center = Point3::Zero();
  double radius = 0.0;

  double volume() const;
  bool operator==(const Sphere&) const = default;
};

enum class FitMethod { kRansac, kLeastSquares };

std::string to_string(FitMethod m);
/// Accepts "ransac", "lsq" and "least_squares".
FitMethod fit_method_from_string(const std::string& s);

struct RansacConfig {
  int iterations_max = 500;
  /// Relative residual |dist - r| / r below which a point is an inlier.
  double tolerance_t = 0.05;
  std::uint64_t seed = 0;
  double radius_min = 5.0;
  double radius_max = 40.0;

  void validate() const;
};

struct FitResult {
  Sphere sphere;
  std::size_t inlier_count = 0;
  /// Root mean square of the geometric residual |dist - r|.
  double rms_residual = 0.0;
  FitMethod method = FitMethod::kLeastSquares;
  /// RANSAC only: the winning minimal-sample hypothesis before refinement.
  std::optional<Sphere> hypothesis;
  bool curvature_flipped = false;
  /// Set when the view direction was undefined during curvature correction.
  bool curvature_warning = false;
};

/// The sphere through four points. Throws DegenerateError for coplanar or
/// repeated points.
Sphere sphere_from_4(const std::array<Point3, 4>& points);
/// Same as sphere_from_4 but reports degeneracy as nullopt.
std::optional<Sphere> try_sphere_from_4(const std::array<Point3, 4>& points);

/// Number of points with |dist(center, p) - r| / r < tolerance_t.
std::size_t count_inliers(std::span<const Point3> points, const Sphere& sphere, double tolerance_t);

double rms_geometric_residual(std::span<const Point3> points, const Sphere& sphere);

/// Algebraic least squares on |p|^2 = 2 p.c + rho with rho = r^2 - |c|^2.
/// Points are centered and scaled internally for conditioning.
FitResult fit_least_squares(std::span<const Point3> points);
inline FitResult fit_least_squares(const PointCloud& cloud) { return fit_least_squares(cloud.points); }

/// Minimal-sample RANSAC. The winner (most inliers, earliest on ties) is
/// refined by least squares on its inlier set.
FitResult fit_ransac(std::span<const Point3> points, const RansacConfig& cfg);
inline FitResult fit_ransac(const PointCloud& cloud, const RansacConfig& cfg) {
  return fit_ransac(cloud.points, cfg);
}

/// Reflects the center through the cloud centroid when it lies on the camera
/// side of the observed surface.
FitResult correct_curvature(const FitResult& fit, const FruitletObservation& obs);
FitResult correct_curvature(const FitResult& fit, const Point3& cloud_centroid,
                            const Point3& camera_center);

}  // namespace fruitmap
