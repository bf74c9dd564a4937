#pragma once

// On-disk scan bundles and JSON (de)serialization of configs and results.
//
// Bundle layout:
//   manifest.json            scan id, units, intrinsics, per-frame entries
//   frames/NNNNNN.depth      text header + little-endian float32 raster
//   frames/NNNNNN.pgm        16-bit binary PGM instance labels
//   frames/NNNNNN.pose       4x4 row-major camera-to-world matrix
//   ground_truth.json        optional simulator ground truth

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fruitmap/eval.hpp"
#include "fruitmap/fruit_map.hpp"
#include "fruitmap/simulator.hpp"

namespace fruitmap::io {

using nlohmann::json;

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kGroundTruthName = "ground_truth.json";

struct PipelineConfig {
  ScanConfig scan;
  double center_tolerance_mm = 15.0;

  void validate() const;
};

json to_json(const PipelineConfig& cfg);
/// Accepts a bare config object or any document carrying one under "config".
PipelineConfig pipeline_config_from_json(const json& j);

json to_json(const sim::SimulationConfig& cfg);
/// Accepts a bare simulation config or a document (e.g. a bundle manifest)
/// carrying one under "simulation".
sim::SimulationConfig simulation_config_from_json(const json& j);

json to_json(const CameraIntrinsics& k);
CameraIntrinsics intrinsics_from_json(const json& j);

json to_json(const Sphere& s);
json to_json(const FruitletMap& map);
json to_json(const ScanStats& stats);
json to_json(const CountReport& report);
json to_json(const AggregateSummary& summary);
CountReport count_report_from_json(const json& j);

json read_json(const std::filesystem::path& path);
/// Pretty-printed, newline terminated.
void write_json(const std::filesystem::path& path, const json& j);

void write_depth(std::ostream& os, const DepthImage& depth);
DepthImage read_depth(std::istream& is);
void write_mask(std::ostream& os, const MaskImage& mask);
/// Reads labels only; instance metadata lives in the manifest.
MaskImage read_mask(std::istream& is);
void write_pose(std::ostream& os, const RigidTransform& pose);
RigidTransform read_pose(std::istream& is);

struct Bundle {
  std::string scan_id;
  std::vector<CameraFrame> frames;
  std::optional<std::vector<sim::FruitletTruth>> truth;
  /// Simulation config that produced the bundle, if any.
  std::optional<json> simulation;
};

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);
/// Loads and validates every frame; frames are returned in frame_id order.
/// Throws BundleError naming the offending frame.
Bundle read_bundle(const std::filesystem::path& dir);

}  // namespace fruitmap::io
