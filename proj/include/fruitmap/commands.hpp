#pragma once

// The simulate / count / evaluate / report entry points. Each command is a
// pure function of its on-disk inputs and config; the produced documents
// embed the effective config so a run can be repeated from its own output.

#include <filesystem>
#include <vector>

#include "fruitmap/io.hpp"

namespace fruitmap::commands {

using io::json;

/// Renders a scan and writes it as a bundle with ground truth. Returns the
/// manifest.
json simulate(const sim::SimulationConfig& cfg, const std::filesystem::path& out_dir);

/// Runs the mapping pipeline over a bundle. Returns the count report.
json count(const std::filesystem::path& bundle_dir, const io::PipelineConfig& cfg);

struct ScanEvaluation {
  /// Against every ground-truth fruitlet.
  CountReport all;
  /// Against fruitlets seen with at least min_points pixels in some frame.
  CountReport visible;
  std::size_t never_visible = 0;
};

ScanEvaluation evaluate_map(const FruitletMap& map, const std::vector<sim::FruitletTruth>& truth,
                            const io::PipelineConfig& cfg);

/// Count plus scoring against the bundle's ground truth. Throws BundleError
/// when the bundle has none.
json evaluate(const std::filesystem::path& bundle_dir, const io::PipelineConfig& cfg);

/// Aggregates evaluation reports into per-method summaries.
json report(const std::vector<json>& evaluations);

/// Human-readable rendering of a report() document.
std::string format_report(const json& summary);

}  // namespace fruitmap::commands
