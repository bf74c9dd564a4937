#include "fruitmap/commands.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace fruitmap::commands {

namespace fs = std::filesystem;

json simulate(const sim::SimulationConfig& cfg, const fs::path& out_dir) {
  sim::SimulatedScan scan = sim::simulate_scan(cfg);
  if (scan.frames.empty()) throw InvalidArgument("every viewpoint was dropped; nothing to write");
  io::Bundle bundle;
  bundle.scan_id = scan.scan_id;
  bundle.frames = std::move(scan.frames);
  bundle.truth = std::move(scan.truth);
  bundle.simulation = io::to_json(cfg);
  io::write_bundle(out_dir, bundle);
  return io::read_json(out_dir / io::kManifestName);
}

namespace {

json scan_document(const char* format, const fs::path& bundle_dir, const io::Bundle& bundle,
                   const io::PipelineConfig& cfg, const ScanResult& result) {
  return json{{"format", format},
              {"version", 1},
              {"bundle", bundle_dir.generic_string()},
              {"scan_id", bundle.scan_id},
              {"config", io::to_json(cfg)},
              {"method", to_string(cfg.scan.method)},
              {"count", result.map.count()},
              {"tracks", io::to_json(result.map)},
              {"stats", io::to_json(result.stats)}};
}

}  // namespace

json count(const fs::path& bundle_dir, const io::PipelineConfig& cfg) {
  cfg.validate();
  const io::Bundle bundle = io::read_bundle(bundle_dir);
  const ScanResult result = process_scan(bundle.frames, cfg.scan, bundle.scan_id);
  return scan_document("fruitmap-count-report", bundle_dir, bundle, cfg, result);
}

ScanEvaluation evaluate_map(const FruitletMap& map, const std::vector<sim::FruitletTruth>& truth,
                            const io::PipelineConfig& cfg) {
  std::vector<Sphere> predicted;
  for (const auto& t : map.tracks()) predicted.push_back(t.sphere);
  std::vector<Sphere> all;
  std::vector<Sphere> visible;
  const auto min_points = static_cast<std::size_t>(cfg.scan.extraction.min_points);
  for (const auto& t : truth) {
    all.push_back(t.sphere);
    if (t.visible(min_points)) visible.push_back(t.sphere);
  }
  ScanEvaluation ev;
  const MatchCounts m_all = match_ground_truth(predicted, all, cfg.center_tolerance_mm);
  const MatchCounts m_vis = match_ground_truth(predicted, visible, cfg.center_tolerance_mm);
  ev.all = CountReport::from_counts(m_all.tp, m_all.fp, m_all.fn);
  ev.visible = CountReport::from_counts(m_vis.tp, m_vis.fp, m_vis.fn);
  ev.never_visible = all.size() - visible.size();
  return ev;
}

json evaluate(const fs::path& bundle_dir, const io::PipelineConfig& cfg) {
  cfg.validate();
  const io::Bundle bundle = io::read_bundle(bundle_dir);
  if (!bundle.truth) {
    throw BundleError(BundleError::Kind::kMissingGroundTruth, "bundle " + bundle_dir.generic_string() +
                                                                  " has no ground truth file");
  }
  const ScanResult result = process_scan(bundle.frames, cfg.scan, bundle.scan_id);
  const ScanEvaluation ev = evaluate_map(result.map, *bundle.truth, cfg);

  json doc = scan_document("fruitmap-evaluation-report", bundle_dir, bundle, cfg, result);
  json error = nullptr;
  if (const auto e = error_summary(ev.visible)) {
    error = {{"percentage_error", e->percentage_error}, {"absolute_percentage_error", e->absolute_percentage_error}};
  }
  doc["evaluation"] = {{"center_tolerance_mm", cfg.center_tolerance_mm},
                       {"min_points", cfg.scan.extraction.min_points},
                       {"never_visible", ev.never_visible},
                       {"pipeline_fn", ev.visible.fn},
                       {"all", io::to_json(ev.all)},
                       {"visible", io::to_json(ev.visible)},
                       {"error", error}};
  return doc;
}

json report(const std::vector<json>& evaluations) {
  if (evaluations.empty()) throw InvalidArgument("report needs at least one evaluation");
  std::map<std::string, std::vector<CountReport>> by_method;
  std::map<std::string, json> rows;
  for (const auto& ev : evaluations) {
    if (ev.value("format", "") != "fruitmap-evaluation-report") {
      throw InvalidArgument("report inputs must be evaluation reports");
    }
    const std::string method = ev.at("method").get<std::string>();
    const CountReport r = io::count_report_from_json(ev.at("evaluation").at("visible"));
    by_method[method].push_back(r);
    json row = io::to_json(r);
    row["scan_id"] = ev.at("scan_id");
    rows[method].push_back(row);
  }
  json methods = json::object();
  for (const auto& [method, reports] : by_method) {
    json m = io::to_json(aggregate(reports));
    m["scans_detail"] = rows[method];
    methods[method] = m;
  }
  return json{{"format", "fruitmap-summary"}, {"version", 1}, {"methods", methods}};
}

std::string format_report(const json& summary) {
  auto num = [](const json& v, const char* fmt) {
    if (v.is_null()) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, v.get<double>());
    return std::string(buf);
  };
  std::ostringstream os;
  for (const auto& [method, m] : summary.at("methods").items()) {
    os << "method " << method << " (" << m.at("scans").get<std::size_t>() << " scans)\n";
    os << "  scan                 GT  Pred   TP   FP   FN  Precision  Recall     F1\n";
    for (const auto& row : m.at("scans_detail")) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-18s %4d %5d %4d %4d %4d", row.at("scan_id").get<std::string>().c_str(),
                    row.at("ground_truth").get<int>(), row.at("predicted").get<int>(), row.at("tp").get<int>(),
                    row.at("fp").get<int>(), row.at("fn").get<int>());
      os << line << "  " << num(row.at("precision"), "%9.3f") << " " << num(row.at("recall"), "%7.3f") << " "
         << num(row.at("f1"), "%6.3f") << '\n';
    }
    os << "  average precision " << num(m.at("mean_precision"), "%.3f") << "  recall "
       << num(m.at("mean_recall"), "%.3f") << "  f1 " << num(m.at("mean_f1"), "%.3f") << '\n';
    os << "  percentage error " << num(m.at("mean_percentage_error"), "%.2f") << " %  absolute "
       << num(m.at("mean_absolute_percentage_error"), "%.2f") << " %\n";
  }
  return os.str();
}

}  // namespace fruitmap::commands
