#pragma once

// Core 3D types, the pinhole camera model and backprojection of masked depth
// pixels into point clouds. All lengths are millimetres.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "fruitmap/error.hpp"

namespace fruitmap {

using Point3 = Eigen::Vector3d;

/// Rigid motion p' = R p + t. Poses in a scan are camera-to-world.
class RigidTransform {
 public:
  RigidTransform() = default;
  /// Throws InvalidArgument unless `rotation` is orthonormal with det +1.
  RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 operator()(const Point3& p) const { return apply(p); }
  RigidTransform inverse() const;

  /// Largest entry of |R^T R - I| and |det R - 1|.
  static double orthonormality_error(const Eigen::Matrix3d& rotation);

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Point3 translation_ = Point3::Zero();
};

/// compose(a, b)(p) == a(b(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

struct CameraIntrinsics {
  double fx = 371.0;
  double fy = 371.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const;
  /// Pixel coordinates of a camera-frame point (z > 0).
  Eigen::Vector2d project(const Point3& p) const;
  /// Camera-frame direction through pixel (u, v), scaled so that z == 1.
  Point3 ray(double u, double v) const;
};

/// Per-pixel metric depth in mm. Non-positive values mean "no depth".
class DepthImage {
 public:
  static constexpr float kInvalid = 0.0f;

  DepthImage() = default;
  DepthImage(int width, int height, float fill = kInvalid);
  DepthImage(int width, int height, std::vector<float> values);

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int u, int v) const { return values_[index(u, v)]; }
  float& at(int u, int v) { return values_[index(u, v)]; }
  std::span<const float> values() const { return values_; }
  std::span<float> values() { return values_; }

  static bool is_valid(float depth) { return depth > 0.0f && std::isfinite(depth); }

  bool operator==(const DepthImage&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

enum class InstanceClass { kFruitlet, kCalyx, kStem };

std::string to_string(InstanceClass c);
InstanceClass instance_class_from_string(const std::string& s);

struct InstanceInfo {
  InstanceClass cls = InstanceClass::kFruitlet;
  double score = 1.0;

  bool operator==(const InstanceInfo&) const = default;
};

/// Instance label image. Label 0 is background; labels 1..K index
/// `instances()[label - 1]`.
class MaskImage {
 public:
  using Label = std::uint16_t;

  MaskImage() = default;
  MaskImage(int width, int height);
  MaskImage(int width, int height, std::vector<Label> labels, std::vector<InstanceInfo> instances);

  int width() const { return width_; }
  int height() const { return height_; }
  Label at(int u, int v) const { return labels_[index(u, v)]; }
  Label& at(int u, int v) { return labels_[index(u, v)]; }
  std::span<const Label> labels() const { return labels_; }
  const std::vector<InstanceInfo>& instances() const { return instances_; }
  std::vector<InstanceInfo>& instances() { return instances_; }
  int instance_count() const { return static_cast<int>(instances_.size()); }
  bool has_instance(int label) const { return label >= 1 && label <= instance_count(); }
  const InstanceInfo& instance(int label) const { return instances_.at(static_cast<std::size_t>(label - 1)); }

  /// Appends an instance record and returns its label.
  Label add_instance(InstanceInfo info);

  /// Throws unless every label is within {0..K}.
  void validate() const;

  bool operator==(const MaskImage&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<Label> labels_;
  std::vector<InstanceInfo> instances_;
};

struct CameraFrame {
  int frame_id = 0;
  CameraIntrinsics intrinsics;
  RigidTransform pose;  // camera-to-world
  DepthImage depth;
  MaskImage masks;

  /// Checks intrinsics, image dimensions and mask labels.
  void validate() const;
};

enum class CoordinateFrame { kCamera, kWorld };

struct PointCloud {
  std::vector<Point3> points;
  CoordinateFrame frame = CoordinateFrame::kCamera;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Point3 centroid() const;
};

/// Camera-frame points for every pixel of `instance` that carries valid
/// depth, in row-major pixel order.
PointCloud backproject(const DepthImage& depth, const CameraIntrinsics& intrinsics,
                       const MaskImage& mask, int instance);

/// Maps a camera-frame cloud into the world frame.
PointCloud to_world(const PointCloud& cloud, const RigidTransform& pose);

}  // namespace fruitmap
