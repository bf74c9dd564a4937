#include "fruitmap/fruit_map.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fruitmap {

double lens_volume(const Sphere& a, const Sphere& b) {
  const double big = std::max(a.radius, b.radius);
  const double small = std::min(a.radius, b.radius);
  const double d = (a.center - b.center).norm();
  if (d >= big + small) return 0.0;
  if (d <= big - small) return Sphere{Point3::Zero(), small}.volume();
  const double gap = big + small - d;
  return std::numbers::pi * gap * gap *
         (d * d + 2.0 * d * small - 3.0 * small * small + 2.0 * d * big + 6.0 * small * big -
          3.0 * big * big) /
         (12.0 * d);
}

double intersection_ratio(const Sphere& a, const Sphere& b) {
  const double small = std::min(a.radius, b.radius);
  if (!(small > 0.0)) return 0.0;
  const double ratio = lens_volume(a, b) / Sphere{Point3::Zero(), small}.volume();
  return std::clamp(ratio, 0.0, 1.0);
}

void MatchConfig::validate() const {
  if (!(merge_threshold > 0.0 && merge_threshold <= 1.0)) {
    throw InvalidArgument("merge_threshold must be in (0,1]");
  }
  if (frame_window < 0) throw InvalidArgument("frame_window must be >= 0");
}

RegisterOutcome FruitletMap::register_sphere(const Sphere& sphere, int frame_id, const MatchConfig& cfg) {
  FruitletTrack* best = nullptr;
  double best_ratio = 0.0;
  for (auto& track : tracks_) {
    if (cfg.frame_window > 0 && frame_id - track.last_frame > cfg.frame_window) continue;
    const double r = intersection_ratio(track.sphere, sphere);
    // Tracks are in id order, so strict '>' keeps the lowest id on ties.
    if (best == nullptr || r > best_ratio) {
      best = &track;
      best_ratio = r;
    }
  }

  if (best != nullptr && best_ratio >= cfg.merge_threshold) {
    const double w = cfg.weighted_average ? static_cast<double>(best->observations) : 1.0;
    best->sphere.center = (w * best->sphere.center + sphere.center) / (w + 1.0);
    best->sphere.radius = (w * best->sphere.radius + sphere.radius) / (w + 1.0);
    ++best->observations;
    best->last_frame = std::max(best->last_frame, frame_id);
    return {best->id, true, best_ratio};
  }

  FruitletTrack track;
  track.id = next_id_++;
  track.sphere = sphere;
  track.first_frame = frame_id;
  track.last_frame = frame_id;
  tracks_.push_back(track);
  return {track.id, false, best_ratio};
}

void ScanConfig::validate() const {
  extraction.validate();
  ransac.validate();
  match.validate();
}

std::uint64_t observation_seed(std::uint64_t seed, const std::string& scan_id, int frame_id, int instance) {
  // FNV-1a over the scan id, then splitmix64 finalization of each field.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : scan_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t s = mix(seed ^ mix(h));
  s = mix(s ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame_id)));
  s = mix(s ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(instance)));
  return s;
}

ScanResult process_scan(const std::vector<CameraFrame>& frames, const ScanConfig& cfg,
                        const std::string& scan_id) {
  if (frames.empty()) throw InvalidArgument("process_scan needs at least one frame");
  cfg.validate();

  ScanResult result;
  auto& stats = result.stats;
  int previous_id = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& frame = frames[i];
    if (i > 0 && frame.frame_id <= previous_id) {
      throw InvalidArgument("frames must be in strictly ascending frame_id order");
    }
    previous_id = frame.frame_id;
    ++stats.frames;

    for (const auto& info : frame.masks.instances()) {
      if (info.cls == InstanceClass::kFruitlet) ++stats.detections_seen;
    }
    auto observations = filter_instances(frame, cfg.extraction);
    stats.observations += observations.size();

    for (const auto& raw : observations) {
      const FruitletObservation obs = split_occlusion(raw, cfg.extraction);
      if (obs.cloud.size() != raw.cloud.size()) ++stats.occlusion_splits;

      FitResult fit;
      try {
        if (cfg.method == FitMethod::kRansac) {
          RansacConfig rc = cfg.ransac;
          rc.seed = observation_seed(cfg.ransac.seed, scan_id, obs.frame_id, obs.instance);
          fit = fit_ransac(obs.cloud, rc);
        } else {
          fit = fit_least_squares(obs.cloud);
        }
      } catch (const Error& e) {
        ++stats.fit_failures;
        stats.failures.push_back({obs.frame_id, obs.instance, e.kind() + ": " + e.what()});
        continue;
      }
      if (cfg.curvature_correction) {
        fit = correct_curvature(fit, obs);
        if (fit.curvature_flipped) ++stats.curvature_flips;
      }

      const auto outcome = result.map.register_sphere(fit.sphere, obs.frame_id, cfg.match);
      if (outcome.merged) {
        ++stats.merges;
      } else {
        ++stats.new_tracks;
      }
      result.stream.push_back({obs.frame_id, obs.instance, fit});
    }
  }
  const std::size_t seen = stats.detections_seen;
  stats.filtered_out = seen >= stats.observations ? seen - stats.observations : 0;
  return result;
}

FruitletMap replay(const std::vector<RecordedSphere>& stream, const MatchConfig& cfg) {
  cfg.validate();
  FruitletMap map;
  for (const auto& rec : stream) map.register_sphere(rec.fit.sphere, rec.frame_id, cfg);
  return map;
}

}  // namespace fruitmap
