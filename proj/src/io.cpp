#include "fruitmap/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fruitmap {

BundleError::BundleError(Kind kind, const std::string& message, std::optional<int> frame_id)
    : Error(frame_id ? "frame " + std::to_string(*frame_id) + ": " + message : message),
      kind_(kind),
      frame_id_(frame_id) {}

std::string BundleError::kind() const {
  switch (kind_) {
    case Kind::kMissingFile:
      return "missing_file";
    case Kind::kMalformed:
      return "malformed";
    case Kind::kTruncated:
      return "truncated";
    case Kind::kDimensionMismatch:
      return "dimension_mismatch";
    case Kind::kInvalidPose:
      return "invalid_pose";
    case Kind::kInvalidDepth:
      return "invalid_depth";
    case Kind::kUnitMismatch:
      return "unit_mismatch";
    case Kind::kMissingGroundTruth:
      return "missing_ground_truth";
  }
  return "bundle";
}

}  // namespace fruitmap

namespace fruitmap::io {

namespace fs = std::filesystem;

namespace {

constexpr const char* kDepthMagic = "FMDEPTH";
constexpr int kFormatVersion = 1;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json point_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-element point");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string frame_stem(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames/%06d", frame_id);
  return buf;
}

}  // namespace

void PipelineConfig::validate() const {
  scan.validate();
  if (!(center_tolerance_mm > 0.0)) throw InvalidArgument("center_tolerance_mm must be > 0");
}

json to_json(const PipelineConfig& cfg) {
  const auto& s = cfg.scan;
  return json{
      {"extraction",
       {{"min_points", s.extraction.min_points},
        {"score_threshold", s.extraction.score_threshold},
        {"occlusion_split_enabled", s.extraction.occlusion_split_enabled},
        {"cluster_separation_mm", s.extraction.cluster_separation_mm},
        {"kmeans_iterations", s.extraction.kmeans_iterations}}},
      {"fit",
       {{"method", to_string(s.method)},
        {"curvature_correction", s.curvature_correction},
        {"ransac",
         {{"iterations_max", s.ransac.iterations_max},
          {"tolerance_t", s.ransac.tolerance_t},
          {"radius_min", s.ransac.radius_min},
          {"radius_max", s.ransac.radius_max}}}}},
      {"match",
       {{"merge_threshold", s.match.merge_threshold},
        {"weighted_average", s.match.weighted_average},
        {"frame_window", s.match.frame_window}}},
      {"evaluation", {{"center_tolerance_mm", cfg.center_tolerance_mm}}},
      {"seed", s.ransac.seed},
  };
}

PipelineConfig pipeline_config_from_json(const json& doc) {
  const json& j = doc.contains("config") && doc["config"].is_object() ? doc["config"] : doc;
  if (!j.is_object()) throw InvalidArgument("pipeline config must be a JSON object");
  PipelineConfig cfg;
  auto& s = cfg.scan;
  try {
    if (j.contains("extraction")) {
      const auto& e = j["extraction"];
      s.extraction.min_points = e.value("min_points", s.extraction.min_points);
      s.extraction.score_threshold = e.value("score_threshold", s.extraction.score_threshold);
      s.extraction.occlusion_split_enabled = e.value("occlusion_split_enabled", s.extraction.occlusion_split_enabled);
      s.extraction.cluster_separation_mm = e.value("cluster_separation_mm", s.extraction.cluster_separation_mm);
      s.extraction.kmeans_iterations = e.value("kmeans_iterations", s.extraction.kmeans_iterations);
    }
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      if (f.contains("method")) s.method = fit_method_from_string(f["method"].get<std::string>());
      s.curvature_correction = f.value("curvature_correction", s.curvature_correction);
      if (f.contains("ransac")) {
        const auto& r = f["ransac"];
        s.ransac.iterations_max = r.value("iterations_max", s.ransac.iterations_max);
        s.ransac.tolerance_t = r.value("tolerance_t", s.ransac.tolerance_t);
        s.ransac.radius_min = r.value("radius_min", s.ransac.radius_min);
        s.ransac.radius_max = r.value("radius_max", s.ransac.radius_max);
      }
    }
    if (j.contains("match")) {
      const auto& m = j["match"];
      s.match.merge_threshold = m.value("merge_threshold", s.match.merge_threshold);
      s.match.weighted_average = m.value("weighted_average", s.match.weighted_average);
      s.match.frame_window = m.value("frame_window", s.match.frame_window);
    }
    if (j.contains("evaluation")) {
      cfg.center_tolerance_mm = j["evaluation"].value("center_tolerance_mm", cfg.center_tolerance_mm);
    }
    s.ransac.seed = j.value("seed", s.ransac.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad pipeline config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

json to_json(const sim::SimulationConfig& cfg) {
  const auto& sc = cfg.scene;
  const auto& tr = cfg.trajectory;
  const auto& nz = cfg.noise;
  return json{
      {"scene",
       {{"branch_length", sc.branch_length},
        {"branch_radius", sc.branch_radius},
        {"fruitlet_count", sc.fruitlet_count},
        {"cluster_size_min", sc.cluster_size_min},
        {"cluster_size_max", sc.cluster_size_max},
        {"fruitlet_radius_min", sc.fruitlet_radius_min},
        {"fruitlet_radius_max", sc.fruitlet_radius_max},
        {"leaf_count", sc.leaf_count},
        {"leaf_size", sc.leaf_size}}},
      {"trajectory",
       {{"arc_points", tr.arc_points},
        {"arcs", tr.arcs},
        {"arc_spacing", tr.arc_spacing},
        {"standoff_min", tr.standoff_min},
        {"standoff_max", tr.standoff_max},
        {"intrinsics", to_json(tr.intrinsics)}}},
      {"noise",
       {{"depth_sigma", nz.depth_sigma},
        {"outlier_rate", nz.outlier_rate},
        {"contamination_px", nz.contamination_px},
        {"drop_rate", nz.drop_rate}}},
      {"seed", sc.seed},
  };
}

sim::SimulationConfig simulation_config_from_json(const json& doc) {
  const json& j = doc.contains("simulation") && doc["simulation"].is_object() ? doc["simulation"] : doc;
  if (!j.is_object()) throw InvalidArgument("simulation config must be a JSON object");
  sim::SimulationConfig cfg;
  try {
    if (j.contains("scene")) {
      const auto& s = j["scene"];
      auto& sc = cfg.scene;
      sc.branch_length = s.value("branch_length", sc.branch_length);
      sc.branch_radius = s.value("branch_radius", sc.branch_radius);
      sc.fruitlet_count = s.value("fruitlet_count", sc.fruitlet_count);
      sc.cluster_size_min = s.value("cluster_size_min", sc.cluster_size_min);
      sc.cluster_size_max = s.value("cluster_size_max", sc.cluster_size_max);
      sc.fruitlet_radius_min = s.value("fruitlet_radius_min", sc.fruitlet_radius_min);
      sc.fruitlet_radius_max = s.value("fruitlet_radius_max", sc.fruitlet_radius_max);
      sc.leaf_count = s.value("leaf_count", sc.leaf_count);
      sc.leaf_size = s.value("leaf_size", sc.leaf_size);
    }
    if (j.contains("trajectory")) {
      const auto& t = j["trajectory"];
      auto& tr = cfg.trajectory;
      tr.arc_points = t.value("arc_points", tr.arc_points);
      tr.arcs = t.value("arcs", tr.arcs);
      tr.arc_spacing = t.value("arc_spacing", tr.arc_spacing);
      tr.standoff_min = t.value("standoff_min", tr.standoff_min);
      tr.standoff_max = t.value("standoff_max", tr.standoff_max);
      if (t.contains("intrinsics")) tr.intrinsics = intrinsics_from_json(t["intrinsics"]);
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      auto& nz = cfg.noise;
      nz.depth_sigma = n.value("depth_sigma", nz.depth_sigma);
      nz.outlier_rate = n.value("outlier_rate", nz.outlier_rate);
      nz.contamination_px = n.value("contamination_px", nz.contamination_px);
      nz.drop_rate = n.value("drop_rate", nz.drop_rate);
    }
    cfg.scene.seed = j.value("seed", cfg.scene.seed);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad simulation config: ") + e.what());
  }
  cfg.scene.validate();
  cfg.trajectory.validate();
  cfg.noise.validate();
  return cfg;
}

json to_json(const Sphere& s) { return json{{"center", point_json(s.center)}, {"radius", s.radius}}; }

json to_json(const FruitletMap& map) {
  json tracks = json::array();
  for (const auto& t : map.tracks()) {
    tracks.push_back({{"id", t.id},
                      {"center", point_json(t.sphere.center)},
                      {"radius", t.sphere.radius},
                      {"observations", t.observations},
                      {"first_frame", t.first_frame},
                      {"last_frame", t.last_frame}});
  }
  return tracks;
}

json to_json(const ScanStats& stats) {
  json failures = json::array();
  for (const auto& f : stats.failures) {
    failures.push_back({{"frame_id", f.frame_id}, {"instance", f.instance}, {"reason", f.reason}});
  }
  return json{{"frames", stats.frames},
              {"detections_seen", stats.detections_seen},
              {"observations", stats.observations},
              {"filtered_out", stats.filtered_out},
              {"occlusion_splits", stats.occlusion_splits},
              {"fit_failures", stats.fit_failures},
              {"curvature_flips", stats.curvature_flips},
              {"merges", stats.merges},
              {"new_tracks", stats.new_tracks},
              {"failures", failures}};
}

json to_json(const CountReport& r) {
  json undefined = json::array();
  if (!r.metrics.precision) undefined.push_back("precision");
  if (!r.metrics.recall) undefined.push_back("recall");
  if (!r.metrics.f1) undefined.push_back("f1");
  return json{{"ground_truth", r.ground_truth},
              {"predicted", r.predicted},
              {"tp", r.tp},
              {"fp", r.fp},
              {"fn", r.fn},
              {"precision", optional_number(r.metrics.precision)},
              {"recall", optional_number(r.metrics.recall)},
              {"f1", optional_number(r.metrics.f1)},
              {"undefined", undefined}};
}

CountReport count_report_from_json(const json& j) {
  return CountReport::from_counts(j.at("tp").get<int>(), j.at("fp").get<int>(), j.at("fn").get<int>());
}

json to_json(const AggregateSummary& s) {
  return json{{"scans", s.scans},
              {"mean_precision", optional_number(s.mean_precision)},
              {"mean_recall", optional_number(s.mean_recall)},
              {"mean_f1", optional_number(s.mean_f1)},
              {"undefined", {{"precision", s.undefined_precision}, {"recall", s.undefined_recall}, {"f1", s.undefined_f1}}},
              {"mean_percentage_error", optional_number(s.mean_percentage_error)},
              {"mean_absolute_percentage_error", optional_number(s.mean_absolute_percentage_error)},
              {"pooled",
               {{"tp", s.total_tp},
                {"fp", s.total_fp},
                {"fn", s.total_fn},
                {"precision", optional_number(s.pooled.precision)},
                {"recall", optional_number(s.pooled.recall)},
                {"f1", optional_number(s.pooled.f1)}}}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BundleError(BundleError::Kind::kMissingFile, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw BundleError(BundleError::Kind::kMalformed, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_depth(std::ostream& os, const DepthImage& depth) {
  os << kDepthMagic << ' ' << kFormatVersion << '\n'
     << depth.width() << ' ' << depth.height() << '\n'
     << DepthImage::kInvalid << '\n';
  for (float z : depth.values()) {
    auto bits = std::bit_cast<std::uint32_t>(z);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    char bytes[4];
    std::memcpy(bytes, &bits, 4);
    os.write(bytes, 4);
  }
}

DepthImage read_depth(std::istream& is) {
  std::string magic;
  int version = 0;
  int w = -1;
  int h = -1;
  float sentinel = 1.0f;
  if (!(is >> magic >> version >> w >> h >> sentinel) || magic != kDepthMagic || version != kFormatVersion) {
    throw BundleError(BundleError::Kind::kMalformed, "bad depth header");
  }
  if (w <= 0 || h <= 0) throw BundleError(BundleError::Kind::kMalformed, "bad depth dimensions");
  if (sentinel > 0.0f) throw BundleError(BundleError::Kind::kMalformed, "depth invalid marker must be non-positive");
  is.get();  // single newline after the header
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<char> raw(n * 4);
  is.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw BundleError(BundleError::Kind::kTruncated, "depth raster is truncated");
  }
  std::vector<float> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, raw.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    values[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(values[i])) throw BundleError(BundleError::Kind::kInvalidDepth, "non-finite depth value");
  }
  return DepthImage(w, h, std::move(values));
}

void write_mask(std::ostream& os, const MaskImage& mask) {
  os << "P5\n" << mask.width() << ' ' << mask.height() << "\n65535\n";
  for (auto label : mask.labels()) {
    const char bytes[2] = {static_cast<char>(label >> 8), static_cast<char>(label & 0xff)};
    os.write(bytes, 2);
  }
}

MaskImage read_mask(std::istream& is) {
  std::string magic;
  int w = -1;
  int h = -1;
  int maxval = 0;
  if (!(is >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 65535 || w <= 0 || h <= 0) {
    throw BundleError(BundleError::Kind::kMalformed, "mask must be a 16-bit binary PGM");
  }
  is.get();
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<unsigned char> raw(n * 2);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
    throw BundleError(BundleError::Kind::kTruncated, "mask raster is truncated");
  }
  std::vector<MaskImage::Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<MaskImage::Label>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return MaskImage(w, h, std::move(labels), {});
}

void write_pose(std::ostream& os, const RigidTransform& pose) {
  const Eigen::Matrix4d m = pose.matrix();
  char buf[64];
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      os << buf << (c == 3 ? '\n' : ' ');
    }
  }
}

RigidTransform read_pose(std::istream& is) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(is >> m(r, c))) throw BundleError(BundleError::Kind::kMalformed, "pose needs 16 numbers");
    }
  }
  try {
    return RigidTransform::from_matrix(m);
  } catch (const InvalidArgument& e) {
    throw BundleError(BundleError::Kind::kInvalidPose, e.what());
  }
}

namespace {

std::ofstream open_out(const fs::path& p) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

json truth_json(const std::vector<sim::FruitletTruth>& truth, const std::vector<CameraFrame>& frames) {
  json frame_ids = json::array();
  for (const auto& f : frames) frame_ids.push_back(f.frame_id);
  json items = json::array();
  for (const auto& t : truth) {
    items.push_back({{"id", t.id},
                     {"center", point_json(t.sphere.center)},
                     {"radius", t.sphere.radius},
                     {"visible_pixels", t.visible_pixels}});
  }
  return json{{"format", "fruitmap-ground-truth"},
              {"version", kFormatVersion},
              {"units", "mm"},
              {"frame_ids", frame_ids},
              {"fruitlets", items}};
}

}  // namespace

void write_bundle(const fs::path& dir, const Bundle& bundle) {
  if (bundle.frames.empty()) throw InvalidArgument("a bundle needs at least one frame");
  fs::create_directories(dir / "frames");
  const CameraIntrinsics& k = bundle.frames.front().intrinsics;

  json frames = json::array();
  for (const auto& frame : bundle.frames) {
    frame.validate();
    const auto& fk = frame.intrinsics;
    if (fk.fx != k.fx || fk.fy != k.fy || fk.cx != k.cx || fk.cy != k.cy || fk.width != k.width ||
        fk.height != k.height) {
      throw InvalidArgument("all frames of a bundle must share intrinsics");
    }
    const std::string stem = frame_stem(frame.frame_id);
    {
      auto out = open_out(dir / (stem + ".depth"));
      write_depth(out, frame.depth);
    }
    {
      auto out = open_out(dir / (stem + ".pgm"));
      write_mask(out, frame.masks);
    }
    {
      auto out = open_out(dir / (stem + ".pose"));
      write_pose(out, frame.pose);
    }
    json instances = json::array();
    for (int label = 1; label <= frame.masks.instance_count(); ++label) {
      const auto& info = frame.masks.instance(label);
      instances.push_back({{"label", label}, {"class", to_string(info.cls)}, {"score", info.score}});
    }
    frames.push_back({{"frame_id", frame.frame_id},
                      {"depth", stem + ".depth"},
                      {"mask", stem + ".pgm"},
                      {"pose", stem + ".pose"},
                      {"instances", instances}});
  }

  json manifest{{"format", "fruitmap-scan-bundle"},
                {"version", kFormatVersion},
                {"scan_id", bundle.scan_id},
                {"units", "mm"},
                {"frame_count", bundle.frames.size()},
                {"intrinsics", to_json(k)},
                {"frames", frames}};
  if (bundle.truth) {
    write_json(dir / kGroundTruthName, truth_json(*bundle.truth, bundle.frames));
    manifest["ground_truth"] = kGroundTruthName;
  }
  if (bundle.simulation) manifest["simulation"] = *bundle.simulation;
  write_json(dir / kManifestName, manifest);
}

Bundle read_bundle(const fs::path& dir) {
  using Kind = BundleError::Kind;
  const fs::path manifest_path = dir / kManifestName;
  if (!fs::exists(manifest_path)) throw BundleError(Kind::kMissingFile, "missing " + manifest_path.string());
  const json manifest = read_json(manifest_path);

  Bundle bundle;
  CameraIntrinsics k;
  json frame_entries;
  try {
    if (manifest.value("format", "") != "fruitmap-scan-bundle") {
      throw BundleError(Kind::kMalformed, "manifest is not a fruitmap scan bundle");
    }
    if (manifest.value("units", "") != "mm") {
      throw BundleError(Kind::kUnitMismatch, "bundle units must be mm, got '" + manifest.value("units", "") + "'");
    }
    bundle.scan_id = manifest.at("scan_id").get<std::string>();
    k = intrinsics_from_json(manifest.at("intrinsics"));
    frame_entries = manifest.at("frames");
    if (manifest.at("frame_count").get<std::size_t>() != frame_entries.size()) {
      throw BundleError(Kind::kMalformed, "frame_count does not match the frame list");
    }
    if (manifest.contains("simulation")) bundle.simulation = manifest["simulation"];
  } catch (const json::exception& e) {
    throw BundleError(Kind::kMalformed, std::string("manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw BundleError(Kind::kMalformed, std::string("manifest: ") + e.what());
  }

  for (const auto& entry : frame_entries) {
    CameraFrame frame;
    frame.intrinsics = k;
    std::string depth_file, mask_file, pose_file;
    try {
      frame.frame_id = entry.at("frame_id").get<int>();
      depth_file = entry.at("depth").get<std::string>();
      mask_file = entry.at("mask").get<std::string>();
      pose_file = entry.at("pose").get<std::string>();
    } catch (const json::exception& e) {
      throw BundleError(Kind::kMalformed, std::string("frame entry: ") + e.what());
    }
    const int id = frame.frame_id;

    auto open_in = [&](const std::string& rel) {
      std::ifstream in(dir / rel, std::ios::binary);
      if (!in) throw BundleError(Kind::kMissingFile, "missing " + rel, id);
      return in;
    };
    auto with_frame = [id](const BundleError& e) {
      std::string msg = e.what();
      return BundleError(e.bundle_kind(), msg, id);
    };
    try {
      auto in = open_in(depth_file);
      frame.depth = read_depth(in);
      auto min = open_in(mask_file);
      frame.masks = read_mask(min);
      auto pin = open_in(pose_file);
      frame.pose = read_pose(pin);
    } catch (const BundleError& e) {
      if (e.frame_id()) throw;
      throw with_frame(e);
    }

    if (frame.depth.width() != k.width || frame.depth.height() != k.height) {
      throw BundleError(Kind::kDimensionMismatch, "depth size differs from the manifest intrinsics", id);
    }
    if (frame.masks.width() != k.width || frame.masks.height() != k.height) {
      throw BundleError(Kind::kDimensionMismatch, "mask size differs from the depth image", id);
    }
    try {
      for (const auto& inst : entry.value("instances", json::array())) {
        if (inst.at("label").get<int>() != frame.masks.instance_count() + 1) {
          throw BundleError(Kind::kMalformed, "instance labels must be contiguous from 1", id);
        }
        frame.masks.add_instance({instance_class_from_string(inst.at("class").get<std::string>()),
                                  inst.at("score").get<double>()});
      }
      frame.masks.validate();
    } catch (const json::exception& e) {
      throw BundleError(Kind::kMalformed, std::string("instances: ") + e.what(), id);
    } catch (const InvalidArgument& e) {
      throw BundleError(Kind::kMalformed, e.what(), id);
    }
    bundle.frames.push_back(std::move(frame));
  }

  std::stable_sort(bundle.frames.begin(), bundle.frames.end(),
                   [](const CameraFrame& a, const CameraFrame& b) { return a.frame_id < b.frame_id; });
  for (std::size_t i = 1; i < bundle.frames.size(); ++i) {
    if (bundle.frames[i].frame_id == bundle.frames[i - 1].frame_id) {
      throw BundleError(Kind::kMalformed, "duplicate frame id", bundle.frames[i].frame_id);
    }
  }

  if (manifest.contains("ground_truth")) {
    const json gt = read_json(dir / manifest["ground_truth"].get<std::string>());
    try {
      const auto ids = gt.at("frame_ids").get<std::vector<int>>();
      std::vector<int> present;
      for (const auto& f : bundle.frames) present.push_back(f.frame_id);
      if (ids != present) throw BundleError(Kind::kMalformed, "ground truth frame list does not match the bundle");
      std::vector<sim::FruitletTruth> truth;
      for (const auto& item : gt.at("fruitlets")) {
        sim::FruitletTruth t;
        t.id = item.at("id").get<int>();
        t.sphere = Sphere{point_from_json(item.at("center")), item.at("radius").get<double>()};
        t.visible_pixels = item.at("visible_pixels").get<std::vector<std::size_t>>();
        if (t.visible_pixels.size() != ids.size()) {
          throw BundleError(Kind::kMalformed, "visible_pixels length differs from the frame count");
        }
        truth.push_back(std::move(t));
      }
      bundle.truth = std::move(truth);
    } catch (const json::exception& e) {
      throw BundleError(Kind::kMalformed, std::string("ground truth: ") + e.what());
    }
  }
  return bundle;
}

}  // namespace fruitmap::io
