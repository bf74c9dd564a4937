#include "fruitmap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace fruitmap {

namespace {
constexpr double kOrthonormalTolerance = 1e-6;
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvalidArgument("rigid transform has non-finite entries");
  }
  if (orthonormality_error(rotation) > kOrthonormalTolerance) {
    throw InvalidArgument("rotation is not orthonormal with determinant +1");
  }
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::RowVector4d last = m.row(3);
  if (!(last - Eigen::RowVector4d(0, 0, 0, 1)).isZero(1e-12)) {
    throw InvalidArgument("last row of a rigid transform must be 0 0 0 1");
  }
  return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

double RigidTransform::orthonormality_error(const Eigen::Matrix3d& rotation) {
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation.determinant() - 1.0));
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  // Re-orthonormalize so long chains do not drift away from SO(3).
  Eigen::Matrix3d r = a.rotation() * b.rotation();
  const Eigen::Quaterniond q(r);
  r = q.normalized().toRotationMatrix();
  return RigidTransform(r, a.rotation() * b.translation() + a.translation());
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("principal point must lie inside the image");
  }
}

Eigen::Vector2d CameraIntrinsics::project(const Point3& p) const {
  return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
}

Point3 CameraIntrinsics::ray(double u, double v) const {
  return {(u - cx) / fx, (v - cy) / fy, 1.0};
}

DepthImage::DepthImage(int width, int height, float fill)
    : width_(width),
      height_(height),
      values_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image size");
}

DepthImage::DepthImage(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width < 0 || height < 0 ||
      values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("depth raster size does not match its dimensions");
  }
}

std::string to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::kFruitlet:
      return "fruitlet";
    case InstanceClass::kCalyx:
      return "calyx";
    case InstanceClass::kStem:
      return "stem";
  }
  return "fruitlet";
}

InstanceClass instance_class_from_string(const std::string& s) {
  if (s == "fruitlet") return InstanceClass::kFruitlet;
  if (s == "calyx") return InstanceClass::kCalyx;
  if (s == "stem") return InstanceClass::kStem;
  throw InvalidArgument("unknown instance class '" + s + "'");
}

MaskImage::MaskImage(int width, int height)
    : width_(width),
      height_(height),
      labels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
  if (width < 0 || height < 0) throw InvalidArgument("negative image size");
}

MaskImage::MaskImage(int width, int height, std::vector<Label> labels,
                     std::vector<InstanceInfo> instances)
    : width_(width), height_(height), labels_(std::move(labels)), instances_(std::move(instances)) {
  if (width < 0 || height < 0 ||
      labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("mask raster size does not match its dimensions");
  }
}

MaskImage::Label MaskImage::add_instance(InstanceInfo info) {
  instances_.push_back(info);
  return static_cast<Label>(instances_.size());
}

void MaskImage::validate() const {
  for (const auto& info : instances_) {
    if (!(info.score >= 0.0 && info.score <= 1.0)) {
      throw InvalidArgument("instance score outside [0,1]");
    }
  }
  const auto k = static_cast<Label>(instances_.size());
  if (std::any_of(labels_.begin(), labels_.end(), [k](Label l) { return l > k; })) {
    throw InvalidArgument("mask label exceeds the number of declared instances");
  }
}

void CameraFrame::validate() const {
  intrinsics.validate();
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height) {
    throw InvalidArgument("depth image size does not match intrinsics");
  }
  if (masks.width() != depth.width() || masks.height() != depth.height()) {
    throw InvalidArgument("mask size does not match depth image");
  }
  masks.validate();
}

Point3 PointCloud::centroid() const {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Point3(sum / static_cast<double>(points.size()));
}

PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& intrinsics,
                       const MaskImage& mask, int instance) {
  if (depth.width() != mask.width() || depth.height() != mask.height()) {
    throw InvalidArgument("depth and mask dimensions differ");
  }
  if (!mask.has_instance(instance)) {
    throw InvalidArgument("unknown instance label " + std::to_string(instance));
  }
  PointCloud cloud;
  cloud.frame = CoordinateFrame::kCamera;
  const auto label = static_cast<MaskImage::Label>(instance);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (mask.at(u, v) != label) continue;
      const float z = depth.at(u, v);
      if (!DepthImage::is_valid(z)) continue;
      cloud.points.push_back(intrinsics.ray(u, v) * static_cast<double>(z));
    }
  }
  return cloud;
}

PointCloud to_world(const PointCloud& cloud, const RigidTransform& pose) {
  if (cloud.frame == CoordinateFrame::kWorld) {
    throw InvalidArgument("cloud is already in the world frame");
  }
  PointCloud out;
  out.frame = CoordinateFrame::kWorld;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(pose.apply(p));
  return out;
}

}  // namespace fruitmap
