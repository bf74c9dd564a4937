#include "fruitmap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fruitmap::sim {

namespace {

constexpr int kFruitletAttempts = 200;
constexpr int kClusterAttempts = 100;
constexpr int kLeafAttempts = 500;
constexpr double kLeafClearance = 2.0;
constexpr double kAllowedOverlap = 0.3;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Point3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Point3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-9) return v / len;
  }
}

double distance_to_segment(const Point3& p, const Branch& b) {
  const Point3 axis = b.end - b.start;
  const double s = std::clamp((p - b.start).dot(axis) / axis.squaredNorm(), 0.0, 1.0);
  return (p - (b.start + s * axis)).norm();
}

double sphere_disc_distance(const Point3& c, const Leaf& leaf) {
  const Point3 rel = c - leaf.center;
  const double h = rel.dot(leaf.normal);
  const double q = (rel - h * leaf.normal).norm();
  if (q <= leaf.radius) return std::abs(h);
  return std::hypot(h, q - leaf.radius);
}

bool fruitlets_compatible(const Sphere& a, const Sphere& b) {
  const double d = (a.center - b.center).norm();
  return d >= a.radius + b.radius - kAllowedOverlap * std::min(a.radius, b.radius);
}

}  // namespace

void SceneSpec::validate() const {
  if (!(branch_length > 0.0) || !(branch_radius > 0.0)) throw InvalidArgument("branch dimensions must be positive");
  if (fruitlet_count < 0 || leaf_count < 0) throw InvalidArgument("counts must be non-negative");
  if (cluster_size_min < 1 || cluster_size_max > 5 || cluster_size_min > cluster_size_max) {
    throw InvalidArgument("cluster sizes must satisfy 1 <= min <= max <= 5");
  }
  if (!(fruitlet_radius_min > 0.0) || !(fruitlet_radius_max >= fruitlet_radius_min)) {
    throw InvalidArgument("fruitlet radius range is invalid");
  }
  if (!(leaf_size > 0.0)) throw InvalidArgument("leaf_size must be positive");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  Scene scene;
  scene.branch = Branch{Point3::Zero(), Point3(spec.branch_length, 0.0, 0.0), spec.branch_radius};
  scene.camera_side = Point3::UnitZ();

  const double margin = std::min(40.0, spec.branch_length / 4.0);
  int remaining = spec.fruitlet_count;
  int cluster = 0;
  std::uniform_int_distribution<int> cluster_size(spec.cluster_size_min, spec.cluster_size_max);
  while (remaining > 0) {
    const int size = std::min(cluster_size(rng), remaining);
    bool placed = false;
    for (int attempt = 0; attempt < kClusterAttempts && !placed; ++attempt) {
      // Anchor hangs below the branch, swung toward the camera side.
      const double x = uniform(margin, spec.branch_length - margin);
      const double swing = uniform(-20.0, 80.0) * std::numbers::pi / 180.0;
      const Point3 dir(0.0, -std::cos(swing), std::sin(swing));
      std::vector<Sphere> members;
      for (int k = 0; k < size; ++k) {
        bool ok = false;
        for (int f = 0; f < kFruitletAttempts && !ok; ++f) {
          Sphere s;
          s.radius = uniform(spec.fruitlet_radius_min, spec.fruitlet_radius_max);
          if (k == 0) {
            s.center = Point3(x, 0.0, 0.0) + (spec.branch_radius + s.radius + uniform(2.0, 15.0)) * dir;
          } else {
            const double reach = 2.0 * std::max(s.radius, members.front().radius);
            s.center = members.front().center + uniform(0.0, reach) * random_unit(rng);
          }
          if (distance_to_segment(s.center, scene.branch) < spec.branch_radius + s.radius) continue;
          ok = std::all_of(members.begin(), members.end(), [&](const Sphere& m) { return fruitlets_compatible(m, s); }) &&
               std::all_of(scene.fruitlets.begin(), scene.fruitlets.end(),
                           [&](const GroundTruthFruitlet& g) { return fruitlets_compatible(g.sphere, s); });
          if (ok) members.push_back(s);
        }
        if (!ok) break;
      }
      if (static_cast<int>(members.size()) != size) continue;
      for (const auto& s : members) {
        scene.fruitlets.push_back({static_cast<int>(scene.fruitlets.size()), cluster, s});
      }
      placed = true;
    }
    if (!placed) throw GenerationError("could not place a fruitlet cluster without interpenetration");
    remaining -= size;
    ++cluster;
  }

  for (int i = 0; i < spec.leaf_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kLeafAttempts && !placed; ++attempt) {
      Leaf leaf;
      leaf.center = Point3(uniform(0.0, spec.branch_length), uniform(-90.0, 40.0), uniform(35.0, 130.0));
      leaf.normal = random_unit(rng);
      leaf.radius = 0.5 * spec.leaf_size * uniform(0.75, 1.25);
      placed = std::all_of(scene.fruitlets.begin(), scene.fruitlets.end(), [&](const GroundTruthFruitlet& g) {
        return sphere_disc_distance(g.sphere.center, leaf) >= g.sphere.radius + kLeafClearance;
      });
      if (placed) scene.leaves.push_back(leaf);
    }
    if (!placed) throw GenerationError("could not place a leaf clear of the fruitlets");
  }
  return scene;
}

CameraIntrinsics default_intrinsics() { return CameraIntrinsics{371.0, 371.0, 320.0, 240.0, 640, 480}; }

CameraIntrinsics full_resolution_intrinsics() {
  // 8 mm lens on 3.45 um pixels.
  return CameraIntrinsics{2319.0, 2319.0, 2000.0, 1500.0, 4000, 3000};
}

void TrajectorySpec::validate() const {
  if (arc_points < 1 || arcs < 1) throw InvalidArgument("arc_points and arcs must be >= 1");
  if (!(standoff_min > 0.0) || !(standoff_max >= standoff_min)) throw InvalidArgument("invalid standoff range");
  if (!(arc_spacing >= 0.0)) throw InvalidArgument("arc_spacing must be non-negative");
  intrinsics.validate();
}

std::vector<RigidTransform> plan_trajectory(const TrajectorySpec& spec, const Scene& scene) {
  spec.validate();
  const Point3 axis = (scene.branch.end - scene.branch.start).normalized();
  const Point3 side = (scene.camera_side - scene.camera_side.dot(axis) * axis).normalized();
  const Point3 mid = 0.5 * (scene.branch.start + scene.branch.end);
  const double radius = spec.standoff_max;
  const double half_span = std::acos(std::clamp(spec.standoff_min / spec.standoff_max, -1.0, 1.0));

  // Camera x runs along the branch, z looks back at it, y completes the frame.
  Eigen::Matrix3d rotation;
  const Point3 forward = -side;
  rotation.col(0) = axis;
  rotation.col(1) = forward.cross(axis);
  rotation.col(2) = forward;

  std::vector<RigidTransform> poses;
  poses.reserve(static_cast<std::size_t>(spec.arcs * spec.arc_points));
  for (int a = 0; a < spec.arcs; ++a) {
    const Point3 centre = mid + ((a - 0.5 * (spec.arcs - 1)) * spec.arc_spacing) * axis;
    for (int j = 0; j < spec.arc_points; ++j) {
      const double theta =
          spec.arc_points == 1 ? 0.0 : -half_span + 2.0 * half_span * j / (spec.arc_points - 1);
      const Point3 position = centre + radius * (std::sin(theta) * axis + std::cos(theta) * side);
      poses.emplace_back(rotation, position);
    }
  }
  return poses;
}

namespace {

struct PixelBox {
  int u0 = 0, u1 = -1, v0 = 0, v1 = -1;
};

// Conservative image bounds of an axis-aligned camera-frame box.
PixelBox project_box(const Point3& lo, const Point3& hi, const CameraIntrinsics& k) {
  PixelBox box{0, k.width - 1, 0, k.height - 1};
  if (hi.z() <= 1e-6) return PixelBox{};
  if (lo.z() <= 1e-6) return box;
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  double vmin = umin, vmax = -umin;
  for (int i = 0; i < 8; ++i) {
    const Point3 c((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
    const Eigen::Vector2d uv = k.project(c);
    umin = std::min(umin, uv.x());
    umax = std::max(umax, uv.x());
    vmin = std::min(vmin, uv.y());
    vmax = std::max(vmax, uv.y());
  }
  box.u0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
  box.u1 = std::min(k.width - 1, static_cast<int>(std::ceil(umax)) + 1);
  box.v0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
  box.v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
  return box;
}

class DepthBuffer {
 public:
  DepthBuffer(int width, int height)
      : width_(width),
        depth_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
               std::numeric_limits<double>::infinity()),
        owner_(depth_.size(), -1) {}

  void offer(int u, int v, double t, int owner) {
    const auto i = static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
    if (t > 0.0 && t < depth_[i]) {
      depth_[i] = t;
      owner_[i] = owner;
    }
  }
  double depth(std::size_t i) const { return depth_[i]; }
  int owner(std::size_t i) const { return owner_[i]; }

 private:
  int width_;
  std::vector<double> depth_;
  std::vector<int> owner_;
};

}  // namespace

RenderedFrame render_frame(const Scene& scene, const RigidTransform& pose, const CameraIntrinsics& intrinsics,
                           int frame_id) {
  intrinsics.validate();
  const RigidTransform world_to_cam = pose.inverse();
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  DepthBuffer buffer(w, h);

  // Rays are d = (x, y, 1) in the camera frame, so the ray parameter is depth.
  for (std::size_t f = 0; f < scene.fruitlets.size(); ++f) {
    const Sphere& s = scene.fruitlets[f].sphere;
    const Point3 c = world_to_cam.apply(s.center);
    const Point3 ext = Point3::Constant(s.radius);
    const PixelBox box = project_box(c - ext, c + ext, intrinsics);
    const double cc = c.squaredNorm() - s.radius * s.radius;
    for (int v = box.v0; v <= box.v1; ++v) {
      for (int u = box.u0; u <= box.u1; ++u) {
        const Point3 d = intrinsics.ray(u, v);
        const double a = d.squaredNorm();
        const double b = d.dot(c);
        const double disc = b * b - a * cc;
        if (disc < 0.0) continue;
        buffer.offer(u, v, (b - std::sqrt(disc)) / a, static_cast<int>(f));
      }
    }
  }

  for (const auto& leaf : scene.leaves) {
    const Point3 c = world_to_cam.apply(leaf.center);
    const Point3 n = world_to_cam.rotation() * leaf.normal;
    const Point3 ext = Point3::Constant(leaf.radius);
    const PixelBox box = project_box(c - ext, c + ext, intrinsics);
    const double nc = n.dot(c);
    for (int v = box.v0; v <= box.v1; ++v) {
      for (int u = box.u0; u <= box.u1; ++u) {
        const Point3 d = intrinsics.ray(u, v);
        const double nd = n.dot(d);
        if (std::abs(nd) < 1e-12) continue;
        const double t = nc / nd;
        if ((t * d - c).norm() > leaf.radius) continue;
        buffer.offer(u, v, t, -1);
      }
    }
  }

  if (scene.branch.radius > 0.0 && (scene.branch.end - scene.branch.start).norm() > 1e-9) {
    const Branch& br = scene.branch;
    const Point3 a0 = world_to_cam.apply(br.start);
    const Point3 a1 = world_to_cam.apply(br.end);
    const double length = (a1 - a0).norm();
    const Point3 axis = (a1 - a0) / length;
    const Point3 ext = Point3::Constant(br.radius);
    const PixelBox box = project_box(a0.cwiseMin(a1) - ext, a0.cwiseMax(a1) + ext, intrinsics);
    const Point3 delta = -a0;
    const Point3 mo = delta - delta.dot(axis) * axis;
    const double cterm = mo.squaredNorm() - br.radius * br.radius;
    for (int v = box.v0; v <= box.v1; ++v) {
      for (int u = box.u0; u <= box.u1; ++u) {
        const Point3 d = intrinsics.ray(u, v);
        const Point3 md = d - d.dot(axis) * axis;
        const double qa = md.squaredNorm();
        if (qa < 1e-15) continue;
        const double qb = mo.dot(md);
        const double disc = qb * qb - qa * cterm;
        if (disc < 0.0) continue;
        const double t = (-qb - std::sqrt(disc)) / qa;
        const double s = (t * d - a0).dot(axis);
        if (s < 0.0 || s > length) continue;
        buffer.offer(u, v, t, -1);
      }
    }
  }

  RenderedFrame out;
  out.visible_pixels.assign(scene.fruitlets.size(), 0);
  std::vector<double> depth_values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  std::vector<float> raster(depth_values.size(), DepthImage::kInvalid);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double t = buffer.depth(i);
    if (std::isfinite(t)) raster[i] = static_cast<float>(t);
    const int owner = buffer.owner(i);
    if (owner >= 0) ++out.visible_pixels[static_cast<std::size_t>(owner)];
  }

  // Contiguous labels 1..K in ground-truth order over the visible fruitlets.
  std::vector<MaskImage::Label> label_of(scene.fruitlets.size(), 0);
  std::vector<InstanceInfo> instances;
  for (std::size_t f = 0; f < scene.fruitlets.size(); ++f) {
    if (out.visible_pixels[f] == 0) continue;
    instances.push_back({InstanceClass::kFruitlet, 1.0});
    label_of[f] = static_cast<MaskImage::Label>(instances.size());
    out.label_truth_ids.push_back(scene.fruitlets[f].id);
  }
  std::vector<MaskImage::Label> labels(raster.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int owner = buffer.owner(i);
    if (owner >= 0) labels[i] = label_of[static_cast<std::size_t>(owner)];
  }

  out.frame.frame_id = frame_id;
  out.frame.intrinsics = intrinsics;
  out.frame.pose = pose;
  out.frame.depth = DepthImage(w, h, std::move(raster));
  out.frame.masks = MaskImage(w, h, std::move(labels), std::move(instances));
  return out;
}

CameraFrame add_noise(const CameraFrame& frame, double depth_sigma, double outlier_rate, std::uint64_t seed) {
  if (!(depth_sigma >= 0.0)) throw InvalidArgument("depth_sigma must be >= 0");
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw InvalidArgument("outlier_rate must be in [0,1]");
  CameraFrame out = frame;
  if (depth_sigma == 0.0 && outlier_rate == 0.0) return out;

  float lo = std::numeric_limits<float>::infinity();
  float hi = -lo;
  for (float z : frame.depth.values()) {
    if (!DepthImage::is_valid(z)) continue;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  if (!(lo <= hi)) return out;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, depth_sigma > 0.0 ? depth_sigma : 1.0);
  for (float& z : out.depth.values()) {
    if (!DepthImage::is_valid(z)) continue;
    double value;
    if (unit(rng) < outlier_rate) {
      value = lo + (hi - lo) * unit(rng);
    } else {
      value = depth_sigma > 0.0 ? z + gauss(rng) : z;
    }
    z = static_cast<float>(std::max(value, 1.0));
  }
  return out;
}

CameraFrame contaminate_masks(const CameraFrame& frame, int pixels) {
  if (pixels < 0) throw InvalidArgument("contamination width must be >= 0");
  CameraFrame out = frame;
  if (pixels == 0) return out;
  const int w = frame.depth.width();
  const int h = frame.depth.height();

  // Depth of the fruit surface each labelled pixel grew from.
  std::vector<float> source(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0f);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (frame.masks.at(u, v) != 0) source[static_cast<std::size_t>(v) * w + u] = frame.depth.at(u, v);
    }
  }

  const int du[4] = {1, -1, 0, 0};
  const int dv[4] = {0, 0, 1, -1};
  for (int ring = 0; ring < pixels; ++ring) {
    MaskImage next = out.masks;
    std::vector<float> next_source = source;
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        if (out.masks.at(u, v) != 0) continue;
        const float z = frame.depth.at(u, v);
        if (!DepthImage::is_valid(z)) continue;
        for (int k = 0; k < 4; ++k) {
          const int nu = u + du[k];
          const int nv = v + dv[k];
          if (nu < 0 || nv < 0 || nu >= w || nv >= h) continue;
          const auto label = out.masks.at(nu, nv);
          const float src = source[static_cast<std::size_t>(nv) * w + nu];
          if (label == 0 || !(z < src)) continue;
          next.at(u, v) = label;
          next_source[static_cast<std::size_t>(v) * w + u] = src;
          break;
        }
      }
    }
    out.masks = std::move(next);
    source = std::move(next_source);
  }
  return out;
}

void NoiseSpec::validate() const {
  if (!(depth_sigma >= 0.0)) throw InvalidArgument("depth_sigma must be >= 0");
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw InvalidArgument("outlier_rate must be in [0,1]");
  if (contamination_px < 0) throw InvalidArgument("contamination_px must be >= 0");
  if (!(drop_rate >= 0.0 && drop_rate < 1.0)) throw InvalidArgument("drop_rate must be in [0,1)");
}

bool FruitletTruth::visible(std::size_t min_points) const {
  return std::any_of(visible_pixels.begin(), visible_pixels.end(),
                     [min_points](std::size_t n) { return n >= min_points; });
}

SimulatedScan simulate_scan(const SimulationConfig& cfg) {
  cfg.noise.validate();
  SimulatedScan scan;
  scan.scan_id = "sim-" + std::to_string(cfg.scene.seed);
  scan.scene = generate_scene(cfg.scene);
  const auto poses = plan_trajectory(cfg.trajectory, scan.scene);

  for (const auto& f : scan.scene.fruitlets) scan.truth.push_back({f.id, f.sphere, {}});

  std::mt19937_64 drop_rng(mix(cfg.scene.seed ^ 0x64726f70ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (cfg.noise.drop_rate > 0.0 && unit(drop_rng) < cfg.noise.drop_rate) continue;
    const int frame_id = static_cast<int>(i);
    RenderedFrame rendered = render_frame(scan.scene, poses[i], cfg.trajectory.intrinsics, frame_id);
    for (std::size_t f = 0; f < scan.truth.size(); ++f) {
      scan.truth[f].visible_pixels.push_back(rendered.visible_pixels[f]);
    }
    CameraFrame frame = contaminate_masks(rendered.frame, cfg.noise.contamination_px);
    frame = add_noise(frame, cfg.noise.depth_sigma, cfg.noise.outlier_rate,
                      mix(cfg.scene.seed ^ mix(static_cast<std::uint64_t>(frame_id) + 0x6e6f697365ULL)));
    scan.frames.push_back(std::move(frame));
  }
  return scan;
}

std::size_t never_visible_count(const std::vector<FruitletTruth>& truth, std::size_t min_points) {
  return static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(),
                                                [&](const FruitletTruth& t) { return !t.visible(min_points); }));
}

}  // namespace fruitmap::sim
