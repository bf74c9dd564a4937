#include "fruitmap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace fruitmap {

MatchCounts match_ground_truth(std::span<const Sphere> predicted, std::span<const Sphere> truth,
                               double center_tolerance) {
  if (!(center_tolerance > 0.0)) throw InvalidArgument("center_tolerance must be > 0");

  std::vector<std::tuple<double, int, int>> candidates;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double d = (predicted[i].center - truth[j].center).norm();
      if (d <= center_tolerance) candidates.emplace_back(d, static_cast<int>(i), static_cast<int>(j));
    }
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<bool> pred_used(predicted.size(), false);
  std::vector<bool> truth_used(truth.size(), false);
  MatchCounts m;
  for (const auto& [d, i, j] : candidates) {
    if (pred_used[i] || truth_used[j]) continue;
    pred_used[i] = true;
    truth_used[j] = true;
    m.pairs.emplace_back(i, j);
  }
  m.tp = static_cast<int>(m.pairs.size());
  m.fp = static_cast<int>(predicted.size()) - m.tp;
  m.fn = static_cast<int>(truth.size()) - m.tp;
  return m;
}

Metrics compute_metrics(int tp, int fp, int fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw InvalidArgument("counts must be non-negative");
  Metrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

double percentage_error(int ground_truth, int predicted) {
  if (ground_truth <= 0) throw InvalidArgument("percentage error needs a positive ground truth count");
  return 100.0 * (predicted - ground_truth) / ground_truth;
}

CountReport CountReport::from_counts(int tp, int fp, int fn) {
  CountReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.ground_truth = tp + fn;
  r.predicted = tp + fp;
  r.metrics = compute_metrics(tp, fp, fn);
  return r;
}

std::optional<ErrorSummary> error_summary(const CountReport& report) {
  if (report.ground_truth <= 0) return std::nullopt;
  const double e = percentage_error(report.ground_truth, report.predicted);
  return ErrorSummary{e, std::abs(e)};
}

namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  std::size_t undefined = 0;

  void add(const std::optional<double>& v) {
    if (v) {
      sum += *v;
      ++n;
    } else {
      ++undefined;
    }
  }
  std::optional<double> value() const {
    return n > 0 ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
  }
};

}  // namespace

AggregateSummary aggregate(std::span<const CountReport> reports) {
  if (reports.empty()) throw InvalidArgument("aggregate needs at least one report");
  Mean precision, recall, f1, signed_error, abs_error;
  AggregateSummary s;
  for (const auto& r : reports) {
    precision.add(r.metrics.precision);
    recall.add(r.metrics.recall);
    f1.add(r.metrics.f1);
    if (const auto e = error_summary(r)) {
      signed_error.add(e->percentage_error);
      abs_error.add(e->absolute_percentage_error);
    }
    s.total_tp += r.tp;
    s.total_fp += r.fp;
    s.total_fn += r.fn;
  }
  s.scans = reports.size();
  s.mean_precision = precision.value();
  s.mean_recall = recall.value();
  s.mean_f1 = f1.value();
  s.undefined_precision = precision.undefined;
  s.undefined_recall = recall.undefined;
  s.undefined_f1 = f1.undefined;
  s.mean_percentage_error = signed_error.value();
  s.mean_absolute_percentage_error = abs_error.value();
  s.pooled = compute_metrics(s.total_tp, s.total_fp, s.total_fn);
  return s;
}

}  // namespace fruitmap
