#pragma once

// Scoring of predicted fruitlet maps against ground truth: one-to-one
// matching, precision / recall / F1 and signed / absolute percentage error.

#include <optional>
#include <span>
#include <vector>

#include "fruitmap/sphere_fit.hpp"

namespace fruitmap {

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  /// (prediction index, truth index) for every true positive.
  std::vector<std::pair<int, int>> pairs;
};

/// Greedy one-to-one matching by ascending center distance. Pairs farther
/// apart than center_tolerance are never matched.
MatchCounts match_ground_truth(std::span<const Sphere> predicted, std::span<const Sphere> truth,
                               double center_tolerance = 15.0);

/// A metric is nullopt when its denominator is zero.
struct Metrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Metrics compute_metrics(int tp, int fp, int fn);

/// 100 * (predicted - ground_truth) / ground_truth. Positive when over-counting.
double percentage_error(int ground_truth, int predicted);

struct CountReport {
  int ground_truth = 0;
  int predicted = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  Metrics metrics;

  static CountReport from_counts(int tp, int fp, int fn);
};

struct ErrorSummary {
  double percentage_error = 0.0;
  double absolute_percentage_error = 0.0;
};

/// Signed and absolute error for one scan; nullopt when ground_truth is 0.
std::optional<ErrorSummary> error_summary(const CountReport& report);

struct AggregateSummary {
  std::size_t scans = 0;
  /// Unweighted means over scans where the metric is defined.
  std::optional<double> mean_precision;
  std::optional<double> mean_recall;
  std::optional<double> mean_f1;
  std::size_t undefined_precision = 0;
  std::size_t undefined_recall = 0;
  std::size_t undefined_f1 = 0;
  /// Means over scans with ground_truth > 0.
  std::optional<double> mean_percentage_error;
  std::optional<double> mean_absolute_percentage_error;
  /// Metrics of the summed TP / FP / FN.
  Metrics pooled;
  int total_tp = 0;
  int total_fp = 0;
  int total_fn = 0;
};

AggregateSummary aggregate(std::span<const CountReport> reports);

}  // namespace fruitmap
