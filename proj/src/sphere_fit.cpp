#include "fruitmap/sphere_fit.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fruitmap/extraction.hpp"

namespace fruitmap {

namespace {

constexpr double kMinimalDeterminant = 1e-9;
constexpr double kRankThreshold = 1e-10;

bool is_finite(const Sphere& s) { return s.center.allFinite() && std::isfinite(s.radius); }

}  // namespace

double Sphere::volume() const { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

std::string to_string(FitMethod m) {
  return m == FitMethod::kRansac ? "ransac" : "lsq";
}

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "ransac") return FitMethod::kRansac;
  if (s == "lsq" || s == "least_squares") return FitMethod::kLeastSquares;
  throw InvalidArgument("unknown fit method '" + s + "' (expected ransac or lsq)");
}

void RansacConfig::validate() const {
  if (iterations_max < 1) throw InvalidArgument("ransac iterations_max must be >= 1");
  if (!(tolerance_t > 0.0)) throw InvalidArgument("ransac tolerance_t must be > 0");
  if (!(radius_min >= 0.0) || !(radius_max > radius_min)) {
    throw InvalidArgument("ransac radius bounds must satisfy 0 <= min < max");
  }
}

std::optional<Sphere> try_sphere_from_4(const std::array<Point3, 4>& points) {
  // Translate to the first point: 2 q_i . c = |q_i|^2 for the remaining three.
  Eigen::Matrix3d q;
  for (int i = 0; i < 3; ++i) q.row(i) = (points[i + 1] - points[0]).transpose();
  const double scale = q.rowwise().norm().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  q /= scale;
  if (std::abs(q.determinant()) < kMinimalDeterminant) return std::nullopt;

  const Eigen::Vector3d rhs = 0.5 * q.rowwise().squaredNorm();
  const Eigen::Vector3d local = q.partialPivLu().solve(rhs) * scale;
  Sphere s{points[0] + local, local.norm()};
  if (!is_finite(s)) return std::nullopt;
  return s;
}

Sphere sphere_from_4(const std::array<Point3, 4>& points) {
  auto s = try_sphere_from_4(points);
  if (!s) throw DegenerateError("four points are coplanar or repeated");
  return *s;
}

std::size_t count_inliers(std::span<const Point3> points, const Sphere& sphere, double tolerance_t) {
  const double band = tolerance_t * sphere.radius;
  std::size_t n = 0;
  for (const auto& p : points) {
    if (std::abs((p - sphere.center).norm() - sphere.radius) < band) ++n;
  }
  return n;
}

double rms_geometric_residual(std::span<const Point3> points, const Sphere& sphere) {
  if (points.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : points) {
    const double e = (p - sphere.center).norm() - sphere.radius;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

FitResult fit_least_squares(std::span<const Point3> points) {
  const auto n = points.size();
  if (n < 4) throw InsufficientPointsError("least squares needs at least 4 points");

  Point3 mean = Point3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  double spread = 0.0;
  for (const auto& p : points) spread += (p - mean).squaredNorm();
  spread = std::sqrt(spread / static_cast<double>(n));
  if (!(spread > 0.0) || !std::isfinite(spread)) throw DegenerateError("points are coincident");

  Eigen::MatrixX4d a(static_cast<Eigen::Index>(n), 4);
  Eigen::VectorXd f(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 q = (points[i] - mean) / spread;
    const auto row = static_cast<Eigen::Index>(i);
    a.row(row) << q.x(), q.y(), q.z(), 1.0;
    f(row) = q.squaredNorm();
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixX4d> qr(a);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < 4) throw DegenerateError("points are coplanar; the sphere is not determined");
  const Eigen::Vector4d c = qr.solve(f);

  const Point3 center_local = 0.5 * c.head<3>();
  const double r2 = c(3) + center_local.squaredNorm();
  if (!(r2 > 0.0) || !std::isfinite(r2)) throw FitFailedError("least squares gave a non-positive squared radius");

  FitResult result;
  result.sphere = Sphere{mean + spread * center_local, spread * std::sqrt(r2)};
  result.inlier_count = n;
  result.rms_residual = rms_geometric_residual(points, result.sphere);
  result.method = FitMethod::kLeastSquares;
  return result;
}

FitResult fit_ransac(std::span<const Point3> points, const RansacConfig& cfg) {
  cfg.validate();
  const auto n = points.size();
  if (n < 4) throw InsufficientPointsError("ransac needs at least 4 points");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::optional<Sphere> best;
  std::size_t best_inliers = 0;
  for (int it = 0; it < cfg.iterations_max; ++it) {
    std::array<std::size_t, 4> idx{};
    for (std::size_t k = 0; k < 4; ++k) {
      bool repeated = true;
      while (repeated) {
        idx[k] = pick(rng);
        repeated = false;
        for (std::size_t j = 0; j < k; ++j) repeated = repeated || idx[j] == idx[k];
      }
    }
    const auto candidate =
        try_sphere_from_4({points[idx[0]], points[idx[1]], points[idx[2]], points[idx[3]]});
    if (!candidate) continue;
    if (candidate->radius < cfg.radius_min || candidate->radius > cfg.radius_max) continue;
    const std::size_t inliers = count_inliers(points, *candidate, cfg.tolerance_t);
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = candidate;
    }
  }
  if (!best || best_inliers < 4) throw FitFailedError("no ransac hypothesis reached 4 inliers");

  std::vector<Point3> inliers;
  inliers.reserve(best_inliers);
  const double band = cfg.tolerance_t * best->radius;
  for (const auto& p : points) {
    if (std::abs((p - best->center).norm() - best->radius) < band) inliers.push_back(p);
  }

  FitResult result;
  result.sphere = *best;
  try {
    const FitResult refined = fit_least_squares(inliers);
    if (refined.sphere.radius >= cfg.radius_min && refined.sphere.radius <= cfg.radius_max) {
      result.sphere = refined.sphere;
    }
  } catch (const Error&) {
    // Inliers alone do not pin down a sphere; keep the hypothesis.
  }
  result.inlier_count = best_inliers;
  result.rms_residual = rms_geometric_residual(inliers, result.sphere);
  result.method = FitMethod::kRansac;
  result.hypothesis = best;
  return result;
}

FitResult correct_curvature(const FitResult& fit, const Point3& cloud_centroid,
                            const Point3& camera_center) {
  FitResult out = fit;
  const Point3 view = cloud_centroid - camera_center;
  const double len = view.norm();
  if (!(len > 1e-9)) {
    out.curvature_warning = true;
    return out;
  }
  if ((fit.sphere.center - cloud_centroid).dot(view / len) < 0.0) {
    out.sphere.center = cloud_centroid + (cloud_centroid - fit.sphere.center);
    out.curvature_flipped = true;
  }
  return out;
}

FitResult correct_curvature(const FitResult& fit, const FruitletObservation& obs) {
  return correct_curvature(fit, obs.cloud.centroid(), obs.camera_center);
}

}  // namespace fruitmap
