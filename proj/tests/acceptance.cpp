// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "field_scans.hpp"
#include "fruitmap/commands.hpp"
#include "fruitmap/eval.hpp"
#include "fruitmap/fruit_map.hpp"
#include "fruitmap/io.hpp"
#include "fruitmap/simulator.hpp"
#include "fruitmap/sphere_fit.hpp"
#include "test_util.hpp"

using namespace fruitmap;
using io::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + FRUITMAP_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "fruitmap_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

io::PipelineConfig noisy_profile() {
  return io::pipeline_config_from_json(io::read_json(fs::path(FRUITMAP_CONFIG_DIR) / "noisy_depth.json"));
}

constexpr int kDegradedScenes = 10;

fs::path degraded_bundle(int seed) {
  const fs::path dir = workdir() / ("degraded_" + std::to_string(seed));
  if (!fs::exists(dir / io::kManifestName)) {
    sim::SimulationConfig cfg;
    cfg.scene.seed = static_cast<std::uint64_t>(seed);
    cfg.noise.depth_sigma = 2.0;
    cfg.noise.outlier_rate = 0.05;
    cfg.noise.contamination_px = 2;
    commands::simulate(cfg, dir);
  }
  return dir;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> radius(5.0, 40.0);
  std::uniform_int_distribution<int> count(100, 1000);
  double worst = 0.0;
  RansacConfig rc;
  for (int i = 0; i < 200; ++i) {
    const Sphere truth{testutil::random_point(rng, 500.0), radius(rng)};
    const auto pts = testutil::sphere_points(rng, truth, static_cast<std::size_t>(count(rng)));
    rc.seed = static_cast<std::uint64_t>(i);
    for (const auto& fit : {fit_least_squares(pts), fit_ransac(pts, rc)}) {
      const double ec = (fit.sphere.center - truth.center).norm() / truth.radius;
      const double er = std::abs(fit.sphere.radius - truth.radius) / truth.radius;
      worst = std::max({worst, ec, er});
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 5.0, "worst relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(7000 + trial);
    std::uniform_real_distribution<double> radius(8.0, 18.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const Sphere truth{testutil::random_point(rng, 500.0), radius(rng)};
    auto pts = testutil::sphere_points(rng, truth, 700);
    for (auto& p : pts) p.z() += noise(rng);
    for (int i = 0; i < 300; ++i) pts.push_back(truth.center + testutil::random_point(rng, 50.0));
    RansacConfig rc;
    rc.seed = static_cast<std::uint64_t>(trial);
    const auto fit = fit_ransac(pts, rc);
    if ((fit.sphere.center - truth.center).norm() < 2.0 && std::abs(fit.sphere.radius - truth.radius) < 1.5) ++good;
  }
  const double t = seconds_since(t0);
  return {good >= 95 && t < 30.0, std::to_string(good) + "/100 trials within bounds, " + fmt("%.2f", t) + " s"};
}

Outcome criterion3() {
  int rows_ok = 0;
  std::vector<CountReport> reports;
  for (const auto& row : testdata::kFieldScans) {
    const auto m = compute_metrics(row.tp, row.fp, row.fn);
    if (m.precision && m.recall && m.f1 && std::abs(*m.precision - row.precision) <= 0.001 &&
        std::abs(*m.recall - row.recall) <= 0.001 && std::abs(*m.f1 - row.f1) <= 0.001) {
      ++rows_ok;
    }
    reports.push_back(CountReport::from_counts(row.tp, row.fp, row.fn));
  }
  const auto s = aggregate(reports);
  const bool means = std::abs(*s.mean_precision - testdata::kMeanPrecision) <= 0.001 &&
                     std::abs(*s.mean_recall - testdata::kMeanRecall) <= 0.001 &&
                     std::abs(*s.mean_f1 - testdata::kMeanF1) <= 0.001;
  const int rows = static_cast<int>(std::size(testdata::kFieldScans));
  return {rows_ok == rows && rows == 34 && means,
          std::to_string(rows_ok) + "/" + std::to_string(rows) + " rows, means " + fmt("%.4f", *s.mean_precision) +
              " / " + fmt("%.4f", *s.mean_recall) + " / " + fmt("%.4f", *s.mean_f1)};
}

Outcome criterion4() {
  const fs::path dir = workdir() / "clean";
  if (run_cli("simulate --fruitlets 40 --leaves 20 --seed 4 --out " + q(dir)) != 0) return {false, "simulate failed"};
  const auto t0 = Clock::now();
  if (run_cli("count " + q(dir) + " --out " + q(workdir() / "clean_count.json")) != 0) return {false, "count failed"};
  if (run_cli("evaluate " + q(dir) + " --out " + q(workdir() / "clean_eval.json")) != 0) {
    return {false, "evaluate failed"};
  }
  const double t = seconds_since(t0);
  const json ev = io::read_json(workdir() / "clean_eval.json").at("evaluation");
  const int fp = ev.at("all").at("fp");
  const int fn = ev.at("all").at("fn");
  const int never = ev.at("never_visible");
  const int frames = io::read_json(dir / io::kManifestName).at("frame_count");
  return {fp == 0 && fn == never && frames == 72 && t < 120.0,
          "FP " + std::to_string(fp) + ", FN " + std::to_string(fn) + ", never visible " + std::to_string(never) +
              ", " + std::to_string(frames) + " views, " + fmt("%.1f", t) + " s"};
}

struct DegradedRuns {
  std::vector<json> ransac;
  std::vector<json> lsq;
};

const DegradedRuns& degraded_runs() {
  static const DegradedRuns runs = [] {
    DegradedRuns r;
    for (int seed = 1; seed <= kDegradedScenes; ++seed) {
      const fs::path bundle = degraded_bundle(seed);
      auto cfg = noisy_profile();
      cfg.scan.method = FitMethod::kRansac;
      r.ransac.push_back(commands::evaluate(bundle, cfg));
      cfg.scan.method = FitMethod::kLeastSquares;
      r.lsq.push_back(commands::evaluate(bundle, cfg));
    }
    return r;
  }();
  return runs;
}

Outcome criterion5() {
  const auto& runs = degraded_runs();
  std::vector<CountReport> visible, all;
  for (const auto& ev : runs.ransac) {
    visible.push_back(io::count_report_from_json(ev.at("evaluation").at("visible")));
    all.push_back(io::count_report_from_json(ev.at("evaluation").at("all")));
  }
  const auto v = aggregate(visible);
  const auto a = aggregate(all);
  const bool pass = *v.mean_precision >= 0.85 && *v.mean_recall >= 0.80 && *a.mean_precision >= 0.85 &&
                    *a.mean_recall >= 0.80;
  return {pass, "visible P " + fmt("%.3f", *v.mean_precision) + " R " + fmt("%.3f", *v.mean_recall) + ", all P " +
                    fmt("%.3f", *a.mean_precision) + " R " + fmt("%.3f", *a.mean_recall) + " over " +
                    std::to_string(kDegradedScenes) + " scenes"};
}

Outcome criterion6() {
  const auto& runs = degraded_runs();
  std::vector<json> evaluations = runs.ransac;
  evaluations.insert(evaluations.end(), runs.lsq.begin(), runs.lsq.end());
  const json summary = commands::report(evaluations);
  const json& methods = summary.at("methods");
  bool harness = true;
  std::string detail;
  for (const char* m : {"ransac", "lsq"}) {
    if (!methods.contains(m) || methods.at(m).at("scans") != kDegradedScenes ||
        methods.at(m).at("mean_percentage_error").is_null() ||
        methods.at(m).at("mean_absolute_percentage_error").is_null()) {
      harness = false;
      detail += std::string(m) + " summary missing; ";
      continue;
    }
    detail += std::string(m) + " signed " + fmt("%+.2f", methods.at(m).at("mean_percentage_error").get<double>()) +
              "% abs " + fmt("%.2f", methods.at(m).at("mean_absolute_percentage_error").get<double>()) + "%; ";
  }

  // Constructed cases: duplicate tracks over-count, dropped tracks under-count.
  std::vector<sim::FruitletTruth> truth;
  for (int i = 0; i < 20; ++i) truth.push_back({i, {Point3(60.0 * i, 0, 0), 12.0}, {1000}});
  io::PipelineConfig cfg;
  FruitletMap duplicated, dropped, complete;
  for (const auto& t : truth) {
    complete.register_sphere(t.sphere, 0, cfg.scan.match);
    duplicated.register_sphere(t.sphere, 0, cfg.scan.match);
    duplicated.register_sphere({t.sphere.center + Point3(0, 30, 0), t.sphere.radius}, 1, cfg.scan.match);
    if (t.id % 4 != 0) dropped.register_sphere(t.sphere, 0, cfg.scan.match);
  }
  const auto over = error_summary(commands::evaluate_map(duplicated, truth, cfg).visible);
  const auto under = error_summary(commands::evaluate_map(dropped, truth, cfg).visible);
  const auto exact = error_summary(commands::evaluate_map(complete, truth, cfg).visible);
  const bool signs = over && over->percentage_error > 0.0 && under && under->percentage_error < 0.0 && exact &&
                     exact->percentage_error == 0.0;
  detail += "duplicates " + (over ? fmt("%+.1f", over->percentage_error) : std::string("n/a")) + "%, drops " +
            (under ? fmt("%+.1f", under->percentage_error) : std::string("n/a")) + "%";
  return {harness && signs, detail};
}

Outcome criterion7() {
  const fs::path d = workdir() / "determinism";
  fs::create_directories(d);
  const std::string profile = q(fs::path(FRUITMAP_CONFIG_DIR) / "noisy_depth.json");
  std::vector<std::string> mismatched;
  auto same = [&](const fs::path& a, const fs::path& b) {
    if (!fs::exists(a) || slurp(a) != slurp(b)) mismatched.push_back(fs::relative(a, d).string());
  };
  if (run_cli("simulate --seed 17 --fruitlets 15 --leaves 8 --depth-sigma 1.5 --outlier-rate 0.03 "
              "--contamination 1 --drop-rate 0.1 --out " +
              q(d / "a")) != 0 ||
      run_cli("simulate --config " + q(d / "a" / io::kManifestName) + " --out " + q(d / "b")) != 0) {
    return {false, "simulate failed"};
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    same(e.path(), d / "b" / fs::relative(e.path(), d / "a"));
  }
  const std::string bundle = q(d / "a");
  const bool ran =
      run_cli("count " + bundle + " --config " + profile + " --seed 9 --out " + q(d / "count1.json")) == 0 &&
      run_cli("count " + bundle + " --config " + q(d / "count1.json") + " --out " + q(d / "count2.json")) == 0 &&
      run_cli("evaluate " + bundle + " --config " + profile + " --seed 9 --merge-threshold 0.4 --out " +
              q(d / "eval1.json")) == 0 &&
      run_cli("evaluate " + bundle + " --config " + q(d / "eval1.json") + " --out " + q(d / "eval2.json")) == 0 &&
      run_cli("evaluate " + bundle + " --fit lsq --seed 9 --out " + q(d / "lsq1.json")) == 0 &&
      run_cli("evaluate " + bundle + " --config " + q(d / "lsq1.json") + " --out " + q(d / "lsq2.json")) == 0 &&
      run_cli("report " + q(d / "eval1.json") + " " + q(d / "lsq1.json") + " --out " + q(d / "report1.json")) == 0 &&
      run_cli("report " + q(d / "eval2.json") + " " + q(d / "lsq2.json") + " --out " + q(d / "report2.json")) == 0;
  if (!ran) return {false, "a command failed"};
  same(d / "count1.json", d / "count2.json");
  same(d / "eval1.json", d / "eval2.json");
  same(d / "lsq1.json", d / "lsq2.json");
  same(d / "report1.json", d / "report2.json");
  std::string detail = std::to_string(files) + " bundle files and 4 reports compared";
  if (!mismatched.empty()) detail += ", mismatch in " + mismatched.front();
  return {mismatched.empty() && files > 0, detail};
}

Outcome criterion8() {
  const auto cfg = noisy_profile();
  bool pass = true;
  std::string detail;
  for (int seed = 1; seed <= kDegradedScenes; ++seed) {
    const auto bundle = io::read_bundle(degraded_bundle(seed));
    const auto stream = process_scan(bundle.frames, cfg.scan, bundle.scan_id).stream;
    std::size_t prev = 0;
    std::string counts;
    for (double threshold : {0.3, 0.5, 0.7}) {
      MatchConfig m = cfg.scan.match;
      m.merge_threshold = threshold;
      const std::size_t n = replay(stream, m).count();
      if (n < prev) pass = false;
      prev = n;
      counts += (counts.empty() ? "" : "/") + std::to_string(n);
    }
    if (seed == 1) detail = "scene 1 tracks " + counts + " at 0.3/0.5/0.7";
    if (!pass && detail.find("violated") == std::string::npos) {
      detail += ", violated on scene " + std::to_string(seed) + " (" + counts + ")";
    }
  }
  return {pass, detail + ", " + std::to_string(kDegradedScenes) + " streams checked"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"sphere-fit exactness", criterion1},  {"RANSAC robustness", criterion2},
      {"metric reproduction", criterion3},   {"end-to-end noise-free", criterion4},
      {"end-to-end degraded", criterion5},   {"method comparison", criterion6},
      {"determinism", criterion7},           {"merge monotonicity", criterion8}};
  int failed = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << index << " (" << name << "): " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
