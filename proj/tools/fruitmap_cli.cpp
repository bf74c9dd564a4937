// fruitmap: simulate scans, count fruitlets, evaluate against ground truth
// and summarise evaluations.
//
// Exit codes: 0 success, 1 error (a JSON error record is printed on stderr),
// 2 usage error, 3 acceptance threshold violated.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fruitmap/commands.hpp"

namespace {

using fruitmap::io::json;

constexpr int kUsageError = 2;
constexpr int kThresholdViolated = 3;

struct PipelineFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> fit;
  std::optional<double> merge_threshold;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& flags) {
  cmd->add_option("--config", flags.config, "Pipeline config JSON (or a report embedding one)");
  cmd->add_option("--seed", flags.seed, "RANSAC seed");
  cmd->add_option("--fit", flags.fit, "Sphere fit method")->check(CLI::IsMember({"ransac", "lsq"}));
  cmd->add_option("--merge-threshold", flags.merge_threshold, "Overlap fraction for merging tracks");
}

fruitmap::io::PipelineConfig resolve(const PipelineFlags& flags) {
  fruitmap::io::PipelineConfig cfg;
  if (!flags.config.empty()) cfg = fruitmap::io::pipeline_config_from_json(fruitmap::io::read_json(flags.config));
  if (flags.seed) cfg.scan.ransac.seed = *flags.seed;
  if (flags.fit) cfg.scan.method = fruitmap::fit_method_from_string(*flags.fit);
  if (flags.merge_threshold) cfg.scan.match.merge_threshold = *flags.merge_threshold;
  cfg.validate();
  return cfg;
}

bool meets(const json& value, std::optional<double> minimum) {
  if (!minimum) return true;
  return !value.is_null() && value.get<double>() >= *minimum;
}

int print_error(const std::string& kind, const std::string& message, const json& frame_id = nullptr) {
  json record{{"error", {{"kind", kind}, {"message", message}}}};
  if (!frame_id.is_null()) record["error"]["frame_id"] = frame_id;
  std::cerr << record.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view fruitlet counting from depth, instance masks and poses"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Render a synthetic branch scan bundle with ground truth");
  std::string sim_config;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> fruitlets, leaves, contamination;
  std::optional<double> depth_sigma, outlier_rate, drop_rate;
  bool full_res = false;
  sim_cmd->add_option("--config", sim_config, "Simulation config JSON (or a bundle manifest)");
  sim_cmd->add_option("--seed", sim_seed, "Scene and noise seed");
  sim_cmd->add_option("--fruitlets", fruitlets, "Number of fruitlets");
  sim_cmd->add_option("--leaves", leaves, "Number of leaf occluders");
  sim_cmd->add_option("--depth-sigma", depth_sigma, "Gaussian depth noise (mm)");
  sim_cmd->add_option("--outlier-rate", outlier_rate, "Fraction of depth pixels replaced by outliers");
  sim_cmd->add_option("--contamination", contamination, "Mask bleed onto occluders (pixels)");
  sim_cmd->add_option("--drop-rate", drop_rate, "Fraction of viewpoints dropped");
  sim_cmd->add_flag("--full-res", full_res, "Render at 4000x3000");
  sim_cmd->add_option("--out", sim_out, "Output bundle directory")->required();

  // count / evaluate
  auto* count_cmd = app.add_subcommand("count", "Count fruitlets in a scan bundle");
  std::string count_bundle, count_out;
  PipelineFlags count_flags;
  count_cmd->add_option("bundle", count_bundle, "Scan bundle directory")->required();
  add_pipeline_flags(count_cmd, count_flags);
  count_cmd->add_option("--out", count_out, "Output report JSON")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Count and score against the bundle's ground truth");
  std::string eval_bundle, eval_out;
  PipelineFlags eval_flags;
  std::optional<double> eval_min_precision, eval_min_recall;
  eval_cmd->add_option("bundle", eval_bundle, "Scan bundle directory")->required();
  add_pipeline_flags(eval_cmd, eval_flags);
  eval_cmd->add_option("--min-precision", eval_min_precision, "Fail (exit 3) below this precision");
  eval_cmd->add_option("--min-recall", eval_min_recall, "Fail (exit 3) below this recall");
  eval_cmd->add_option("--out", eval_out, "Output evaluation JSON")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarise evaluation reports per fit method");
  std::vector<std::string> report_inputs;
  std::string report_out;
  std::optional<double> report_min_precision, report_min_recall;
  report_cmd->add_option("evaluations", report_inputs, "Evaluation report files")->required();
  report_cmd->add_option("--min-precision", report_min_precision, "Fail (exit 3) below this mean precision");
  report_cmd->add_option("--min-recall", report_min_recall, "Fail (exit 3) below this mean recall");
  report_cmd->add_option("--out", report_out, "Output summary JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    if (*sim_cmd) {
      fruitmap::sim::SimulationConfig cfg;
      if (!sim_config.empty()) cfg = fruitmap::io::simulation_config_from_json(fruitmap::io::read_json(sim_config));
      if (sim_seed) cfg.scene.seed = *sim_seed;
      if (fruitlets) cfg.scene.fruitlet_count = *fruitlets;
      if (leaves) cfg.scene.leaf_count = *leaves;
      if (depth_sigma) cfg.noise.depth_sigma = *depth_sigma;
      if (outlier_rate) cfg.noise.outlier_rate = *outlier_rate;
      if (contamination) cfg.noise.contamination_px = *contamination;
      if (drop_rate) cfg.noise.drop_rate = *drop_rate;
      if (full_res) cfg.trajectory.intrinsics = fruitmap::sim::full_resolution_intrinsics();
      const json manifest = fruitmap::commands::simulate(cfg, sim_out);
      std::cout << "wrote " << manifest.at("frame_count").get<std::size_t>() << " frames to " << sim_out << '\n';
      return 0;
    }
    if (*count_cmd) {
      const json doc = fruitmap::commands::count(count_bundle, resolve(count_flags));
      fruitmap::io::write_json(count_out, doc);
      std::cout << doc.at("count").get<std::size_t>() << " fruitlets (" << doc.at("method").get<std::string>()
                << ")\n";
      return 0;
    }
    if (*eval_cmd) {
      const json doc = fruitmap::commands::evaluate(eval_bundle, resolve(eval_flags));
      fruitmap::io::write_json(eval_out, doc);
      const json& vis = doc.at("evaluation").at("visible");
      std::cout << "tp " << vis.at("tp") << " fp " << vis.at("fp") << " fn " << vis.at("fn") << " precision "
                << vis.at("precision") << " recall " << vis.at("recall") << '\n';
      if (!meets(vis.at("precision"), eval_min_precision) || !meets(vis.at("recall"), eval_min_recall)) {
        return kThresholdViolated;
      }
      return 0;
    }
    if (*report_cmd) {
      std::vector<json> evaluations;
      for (const auto& path : report_inputs) evaluations.push_back(fruitmap::io::read_json(path));
      const json summary = fruitmap::commands::report(evaluations);
      fruitmap::io::write_json(report_out, summary);
      std::cout << fruitmap::commands::format_report(summary);
      for (const auto& [method, m] : summary.at("methods").items()) {
        if (!meets(m.at("mean_precision"), report_min_precision) || !meets(m.at("mean_recall"), report_min_recall)) {
          return kThresholdViolated;
        }
      }
      return 0;
    }
  } catch (const fruitmap::BundleError& e) {
    return print_error(e.kind(), e.what(), e.frame_id() ? json(*e.frame_id()) : json(nullptr));
  } catch (const fruitmap::Error& e) {
    return print_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return print_error("internal", e.what());
  }
  return 0;
}
