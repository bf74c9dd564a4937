#pragma once

// Synthetic branch scans with known answers. A scene is a straight branch
// (cylinder) carrying clusters of spherical fruitlets with disc-shaped
// leaves in front of it. Frames are rendered by analytic ray casting.
//
// World frame: the branch runs along +x from the origin, +y is up, and the
// cameras sit on the +z side looking back toward the branch.

#include <cstdint>
#include <vector>

#include "fruitmap/geometry.hpp"
#include "fruitmap/sphere_fit.hpp"

namespace fruitmap::sim {

struct SceneSpec {
  double branch_length = 900.0;
  double branch_radius = 8.0;
  int fruitlet_count = 40;
  int cluster_size_min = 1;
  int cluster_size_max = 5;
  double fruitlet_radius_min = 8.0;
  double fruitlet_radius_max = 18.0;
  int leaf_count = 20;
  /// Nominal leaf disc diameter; each leaf varies by +-25 %.
  double leaf_size = 50.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GroundTruthFruitlet {
  int id = 0;
  int cluster = 0;
  Sphere sphere;
};

struct Leaf {
  Point3 center = Point3::Zero();
  Point3 normal = Point3::UnitZ();
  double radius = 0.0;
};

struct Branch {
  Point3 start = Point3::Zero();
  Point3 end = Point3::Zero();
  double radius = 0.0;
};

struct Scene {
  std::vector<GroundTruthFruitlet> fruitlets;
  std::vector<Leaf> leaves;
  Branch branch;
  /// Unit vector from the branch toward the cameras.
  Point3 camera_side = Point3::UnitZ();
};

Scene generate_scene(const SceneSpec& spec);

/// Default 640x480 intrinsics with the field of view of the 4000x3000 rig.
CameraIntrinsics default_intrinsics();
CameraIntrinsics full_resolution_intrinsics();

struct TrajectorySpec {
  int arc_points = 12;
  int arcs = 6;
  double arc_spacing = 15.0;
  double standoff_min = 300.0;
  double standoff_max = 400.0;
  CameraIntrinsics intrinsics = default_intrinsics();

  void validate() const;
};

/// arcs * arc_points camera-to-world poses. Each arc lies in the plane spanned
/// by the branch axis and the camera side, centred on the branch axis with
/// radius standoff_max; its angular span keeps every camera between
/// standoff_min and standoff_max from the axis. Cameras look perpendicular
/// to the branch and consecutive arcs are shifted by arc_spacing along it.
std::vector<RigidTransform> plan_trajectory(const TrajectorySpec& spec, const Scene& scene);

struct RenderedFrame {
  CameraFrame frame;
  /// Ground-truth fruitlet id for each mask label (index label - 1).
  std::vector<int> label_truth_ids;
  /// Visible pixel count per scene fruitlet (index = position in scene).
  std::vector<std::size_t> visible_pixels;
};

/// Ray casts spheres, leaf discs and the branch cylinder with a depth
/// buffer. Fruitlets get instance labels; leaves and branch render depth only.
RenderedFrame render_frame(const Scene& scene, const RigidTransform& pose,
                           const CameraIntrinsics& intrinsics, int frame_id = 0);

/// Gaussian depth noise plus uniform outliers over the frame's valid depth
/// range. Masks are untouched.
CameraFrame add_noise(const CameraFrame& frame, double depth_sigma, double outlier_rate, std::uint64_t seed);

/// Grows every instance mask by up to `pixels` pixels onto occluders lying in
/// front of it, the way imprecise masks bleed onto leaves.
CameraFrame contaminate_masks(const CameraFrame& frame, int pixels);

struct NoiseSpec {
  double depth_sigma = 0.0;
  double outlier_rate = 0.0;
  int contamination_px = 0;
  /// Fraction of planned viewpoints that produce no frame.
  double drop_rate = 0.0;

  void validate() const;
};

struct SimulationConfig {
  SceneSpec scene;
  TrajectorySpec trajectory;
  NoiseSpec noise;
};

struct FruitletTruth {
  int id = 0;
  Sphere sphere;
  /// Visible pixel count per delivered frame, aligned with the frame list.
  std::vector<std::size_t> visible_pixels;

  bool visible(std::size_t min_points) const;
};

struct SimulatedScan {
  std::string scan_id;
  Scene scene;
  std::vector<CameraFrame> frames;
  std::vector<FruitletTruth> truth;
};

SimulatedScan simulate_scan(const SimulationConfig& cfg);

/// Number of fruitlets never seen with at least min_points pixels.
std::size_t never_visible_count(const std::vector<FruitletTruth>& truth, std::size_t min_points);

}  // namespace fruitmap::sim
