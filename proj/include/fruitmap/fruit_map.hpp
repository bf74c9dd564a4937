#pragma once

// Persistent fruitlet map. Per-view sphere estimates are registered against
// existing tracks by volumetric overlap; a sufficiently overlapping estimate
// is averaged into the matched track, otherwise it starts a new track with a
// fresh id. Ids are never reused or retired.

#include <cstdint>
#include <string>
#include <vector>

#include "fruitmap/extraction.hpp"
#include "fruitmap/sphere_fit.hpp"

namespace fruitmap {

/// Lens volume of two spheres divided by the volume of the smaller one.
/// 1 for containment, 0 for disjoint spheres.
double intersection_ratio(const Sphere& a, const Sphere& b);

/// Volume of the intersection of two spheres.
double lens_volume(const Sphere& a, const Sphere& b);

struct MatchConfig {
  double merge_threshold = 0.5;
  /// Merge with an observation-count weighted mean instead of the plain
  /// average of track and new estimate.
  bool weighted_average = false;
  /// Only tracks seen within this many frames are merge candidates; 0 means
  /// unlimited.
  int frame_window = 0;

  void validate() const;
};

struct FruitletTrack {
  int id = 0;
  Sphere sphere;
  int observations = 1;
  int first_frame = 0;
  int last_frame = 0;
};

struct RegisterOutcome {
  int track_id = 0;
  bool merged = false;
  double best_ratio = 0.0;
};

class FruitletMap {
 public:
  RegisterOutcome register_sphere(const Sphere& sphere, int frame_id, const MatchConfig& cfg);

  const std::vector<FruitletTrack>& tracks() const { return tracks_; }
  int next_id() const { return next_id_; }
  std::size_t count() const { return tracks_.size(); }

 private:
  std::vector<FruitletTrack> tracks_;
  int next_id_ = 0;
};

inline std::size_t count(const FruitletMap& map) { return map.count(); }

struct ScanConfig {
  ExtractionConfig extraction;
  FitMethod method = FitMethod::kRansac;
  RansacConfig ransac;
  bool curvature_correction = true;
  MatchConfig match;

  void validate() const;
};

/// One fitted sphere as delivered to the registrar.
struct RecordedSphere {
  int frame_id = 0;
  int instance = 0;
  FitResult fit;
};

struct FitFailure {
  int frame_id = 0;
  int instance = 0;
  std::string reason;
};

struct ScanStats {
  std::size_t frames = 0;
  std::size_t detections_seen = 0;
  std::size_t observations = 0;
  std::size_t filtered_out = 0;
  std::size_t occlusion_splits = 0;
  std::size_t fit_failures = 0;
  std::size_t curvature_flips = 0;
  std::size_t merges = 0;
  std::size_t new_tracks = 0;
  std::vector<FitFailure> failures;
};

struct ScanResult {
  FruitletMap map;
  ScanStats stats;
  std::vector<RecordedSphere> stream;
};

/// Deterministic per-observation RNG seed from the run seed and provenance.
std::uint64_t observation_seed(std::uint64_t seed, const std::string& scan_id, int frame_id, int instance);

/// Runs extraction, occlusion split, fitting, curvature correction and
/// registration frame by frame. Frames must be in ascending frame_id order.
ScanResult process_scan(const std::vector<CameraFrame>& frames, const ScanConfig& cfg,
                        const std::string& scan_id = "scan");

/// Re-registers a recorded sphere stream under a different match config.
FruitletMap replay(const std::vector<RecordedSphere>& stream, const MatchConfig& cfg);

}  // namespace fruitmap
