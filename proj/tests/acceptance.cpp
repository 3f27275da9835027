// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [AC1 ... AC8]   run the named criteria (default: all)
//
// Exit status is 0 when every selected criterion passes, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "circcal/config.hpp"
#include "circcal/parallel.hpp"
#include "circcal/pipeline.hpp"
#include "oracles.hpp"

using namespace circcal;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::filesystem::path ScratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("circcal_acceptance_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

RunConfig ScenarioConfig(const std::string& name) {
  RunConfig c = DefaultConfig();
  c.paths.output_dir = ScratchDir(name);
  c.seed = 1;
  c.es.seed = 1;
  return c;
}

Outcome RollRecovery(const RunConfig& config, double mae_limit, double max_limit,
                     double seconds_limit, int workers) {
  std::ostringstream log;
  const auto start = std::chrono::steady_clock::now();
  const RecoveryScore s = CmdEvaluate(config, {workers, &log, nullptr});
  const double secs = Seconds(start);
  std::filesystem::remove_all(config.paths.output_dir);
  std::string detail = Fmt("roll MAE %.3f deg (< %.1f), max %.3f deg", s.mae_roll_deg, mae_limit, s.max_roll_deg);
  bool pass = s.mae_roll_deg < mae_limit;
  if (max_limit > 0.0) {
    detail += Fmt(" (< %.1f)", max_limit);
    pass = pass && s.max_roll_deg < max_limit;
  }
  if (seconds_limit > 0.0) {
    detail += Fmt(", %.0f s (< %.0f s)", secs, seconds_limit);
    pass = pass && secs < seconds_limit;
  } else {
    detail += Fmt(", %.0f s", secs);
  }
  return {pass, detail};
}

// 36-view ellipsoid phantom, 10 rolls +10 deg, noiseless.
Outcome AC1(int workers) {
  return RollRecovery(ScenarioConfig("ac1"), 0.5, 1.0, 600.0, workers);
}

// Same scenario with 5% label flips and a 2-pixel box blur.
Outcome AC2(int workers) {
  RunConfig c = ScenarioConfig("ac2");
  c.scenario.flip_rate = 0.05;
  c.scenario.blur_radius = 2;
  return RollRecovery(c, 1.5, 0.0, 0.0, workers);
}

// Objective vs the naive per-voxel oracle on an 8^3 grid with 4 random views.
Outcome AC3(int) {
  std::mt19937_64 rng(3);
  CameraRig rig;
  rig.intrinsics = BuildIntrinsics(1.0, 72.0, 72.0, 11.5, 11.5);
  rig.nominal_distance = 4.0;
  const VoxelGrid grid = InitGrid(Vec3(0.02, -0.03, 0.01), Vec3::Constant(0.4), {8, 8, 8});
  std::uniform_real_distribution<double> tilt(-0.2, 0.2), roll(-3.1, 3.1), trans(-0.3, 0.3);
  double worst = 0.0;
  int trials = 0;
  for (VoxelSupport support : {VoxelSupport::kBall, VoxelSupport::kBox}) {
    CostConfig config;
    config.support = support;
    for (int t = 0; t < 25; ++t, ++trials) {
      const auto views = oracle::RandomViews(4, 24, 24, 1e-3, rng);
      RigParams theta;
      theta.yaw = tilt(rng);
      theta.pitch = tilt(rng);
      theta.trans = trans(rng);
      for (int i = 0; i < 3; ++i) theta.rolls.push_back(roll(rng));
      const double fast = EvaluateTheta(theta, views, grid, rig, config);
      const double slow = oracle::BruteForceObjective(theta, views, grid, rig, config);
      worst = std::max(worst, std::abs(fast - slow) / std::max(std::abs(slow), 1e-300));
    }
  }
  return {worst <= 1e-8, Fmt("%d fixtures, worst relative difference %.2e (<= 1e-8)", trials, worst)};
}

// Fusion unit behaviour on random inputs.
Outcome AC4(int) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  std::uniform_int_distribution<int> count(1, 40);
  int failures = 0;
  constexpr int kCases = 10000;
  constexpr double kTol = 1e-12;
  for (int c = 0; c < kCases; ++c) {
    const int n = count(rng);
    std::vector<double> pf(n), pb(n);
    for (int i = 0; i < n; ++i) {
      pf[i] = u(rng);
      pb[i] = u(rng);
    }
    bool ok = true;
    const VoxelEvidence e = JointEvidence(pf, pb);
    const VoxelEvidence naive = oracle::NaiveJointEvidence(pf, pb, kProbabilityEpsilon);
    ok = ok && std::abs(e.pf - naive.pf) <= 1e-10 * naive.pf && std::abs(e.pb - naive.pb) <= 1e-10 * naive.pb;

    const VoxelEvidence single = JointEvidence(std::span(pf).first(1), std::span(pb).first(1));
    ok = ok && std::abs(single.pf - pf[0]) <= kTol && std::abs(single.pb - pb[0]) <= kTol;

    const auto [fmin, fmax] = std::minmax_element(pf.begin(), pf.end());
    const auto [bmin, bmax] = std::minmax_element(pb.begin(), pb.end());
    ok = ok && e.pf >= *fmin * (1 - kTol) && e.pf <= *fmax * (1 + kTol);
    ok = ok && e.pb >= *bmin * (1 - kTol) && e.pb <= *bmax * (1 + kTol);

    const int j = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::vector<double> pf_up = pf, pb_up = pb;
    pf_up[j] = std::uniform_real_distribution<double>(pf[j], 1.0 - kProbabilityEpsilon)(rng);
    pb_up[j] = std::uniform_real_distribution<double>(pb[j], 1.0 - kProbabilityEpsilon)(rng);
    ok = ok && JointEvidence(pf_up, pb).pf >= e.pf * (1 - kTol);
    ok = ok && JointEvidence(pf, pb_up).pb >= e.pb * (1 - kTol);
    if (!ok) ++failures;
  }
  return {failures == 0, Fmt("%d random cases, %d failures", kCases, failures)};
}

// Mesh metrics: sphere r = 0.5 at 128^3 and the unit cube.
Outcome AC5(int workers) {
  const TriangleMesh sphere = ExtractMesh(oracle::SphereVolume(0.5, 128, 1.0), 0.5, workers);
  const MeshMetrics s = Measure(sphere);
  const double v_true = 4.0 / 3.0 * std::numbers::pi * 0.125, a_true = std::numbers::pi;
  const double v_err = std::abs(s.volume - v_true) / v_true, a_err = std::abs(s.surface_area - a_true) / a_true;
  const MeshMetrics cube = Measure(oracle::BoxMesh(Vec3::Zero(), Vec3::Ones()));
  const double c_err = std::max(std::abs(cube.volume - 1.0), std::abs(cube.surface_area - 6.0));
  const bool pass = v_err < 0.05 && a_err < 0.05 && s.watertight && c_err <= 1e-9;
  return {pass, Fmt("sphere V %.4f (%.2f%%), SA %.4f (%.2f%%), watertight %s; cube error %.1e", s.volume, 100 * v_err,
                    s.surface_area, 100 * a_err, s.watertight ? "yes" : "no", c_err)};
}

// Optimizer on the 25-dimensional sphere function, and seed determinism.
Outcome AC6(int workers) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  RigParams target;
  target.yaw = u(rng);
  target.pitch = u(rng);
  target.trans = u(rng);
  for (int i = 0; i < 22; ++i) target.rolls.push_back(u(rng));
  const Eigen::VectorXd c = target.Flatten();
  const Objective sphere = [c](const RigParams& t) { return -(t.Flatten() - c).squaredNorm(); };
  ESConfig config;
  config.tol = 1e-12;
  config.max_generations = 1000;
  config.seed = 6;
  config.workers = workers;
  const CalibrationResult a = Calibrate(sphere, InitializeTheta(23, 0.0), config);
  const CalibrationResult b = Calibrate(sphere, InitializeTheta(23, 0.0), config);
  const double err = (a.theta_star.Flatten() - c).cwiseAbs().maxCoeff();
  const Eigen::VectorXd xa = a.theta_star.Flatten(), xb = b.theta_star.Flatten();
  const bool same = std::memcmp(xa.data(), xb.data(), sizeof(double) * xa.size()) == 0 && a.history == b.history &&
                    a.generations_used == b.generations_used;
  return {err < 1e-3 && a.generations_used <= 1000 && same,
          Fmt("max coordinate error %.2e (< 1e-3) after %d generations; repeat run %s", err, a.generations_used,
              same ? "byte-identical" : "DIFFERS")};
}

// Ground truth scores at least as high as perturbations with a roll off >= 2 deg.
Outcome AC7(int workers) {
  const RunConfig config = DefaultConfig();
  const ScenarioTruth truth = MakeScenario(config);
  const CostEvaluator evaluator(RenderViews(MakePhantom(config), truth, workers), truth.grid, truth.rig, config.cost);
  const double l_gt = evaluator.Evaluate(truth.theta_gt, workers);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> how_many(1, 5);
  std::uniform_real_distribution<double> magnitude(2.0, 10.0);
  int held = 0;
  double closest = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    RigParams theta = truth.theta_gt;
    const auto indices = PerturbIndices(theta.rolls.size(), how_many(rng), rng());
    for (std::size_t i : indices) {
      const double sign = (rng() & 1) ? 1.0 : -1.0;
      theta.rolls[i] += sign * DegToRad(magnitude(rng));
    }
    const double l = evaluator.Evaluate(theta, workers);
    closest = std::max(closest, l - l_gt);
    if (l_gt >= l) ++held;
  }
  return {held >= 99, Fmt("L(gt) >= L(perturbed) in %d/100 (>= 99); closest margin %.1f", held, -closest)};
}

// Objective and calibration outputs across worker counts.
Outcome AC8(int) {
  const RunConfig full = DefaultConfig();
  const ScenarioTruth truth = MakeScenario(full);
  bool eval_same = true;
  for (SamplingMode sampling : {SamplingMode::kNearest, SamplingMode::kBilinear}) {
    CostConfig cost = full.cost;
    cost.sampling = sampling;
    const CostEvaluator evaluator(RenderViews(MakePhantom(full), truth, 2), truth.grid, truth.rig, cost);
    const RigParams perturbed = Perturb(truth.theta_gt, 10, DegToRad(10.0), 5);
    for (const RigParams& theta : {truth.theta_gt, perturbed}) {
      const double one = evaluator.Evaluate(theta, 1);
      for (int w : {2, 8}) {
        const double other = evaluator.Evaluate(theta, w);
        eval_same = eval_same && std::memcmp(&one, &other, sizeof one) == 0;
      }
    }
  }

  RunConfig c = DefaultConfig();
  const auto dir = ScratchDir("ac8");
  c.paths.image_dir = dir / "images";
  c.paths.annotation_labels = dir / "labels.png";
  c.paths.output_dir = dir / "out";
  c.rig.views = 12;
  c.scenario.perturb_count = 3;
  c.grid.resolution = {32, 32, 32};
  c.es.max_generations = 25;
  const CommandContext quiet{};
  CmdSynth(c, quiet, std::nullopt);
  CmdFitColors(c, quiet, ModelPath(c));
  std::vector<std::string> outputs;
  for (int w : {1, 2, 8}) {
    CmdCalibrate(c, {w, nullptr, nullptr}, ModelPath(c), std::nullopt);
    std::ifstream theta(ThetaPath(c));
    std::string text((std::istreambuf_iterator<char>(theta)), std::istreambuf_iterator<char>());
    outputs.push_back(ReadReportPayload(ReportPath(c)) + text);
  }
  std::filesystem::remove_all(dir);
  const bool calib_same = outputs[0] == outputs[1] && outputs[0] == outputs[2];
  return {eval_same && calib_same, Fmt("evaluate_theta %s, calibrate report and theta %s for workers 1, 2, 8",
                                       eval_same ? "bit-identical" : "DIFFERS", calib_same ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::pair<const char*, std::function<Outcome(int)>>> criteria = {
      {"AC1", {"roll recovery, noiseless", AC1}},
      {"AC2", {"roll recovery, 5% flips + 2 px blur", AC2}},
      {"AC3", {"objective vs brute-force oracle", AC3}},
      {"AC4", {"joint evidence properties", AC4}},
      {"AC5", {"mesh metrics fidelity", AC5}},
      {"AC6", {"optimizer sanity", AC6}},
      {"AC7", {"ground-truth dominance", AC7}},
      {"AC8", {"determinism under parallelism", AC8}},
  };
  std::set<std::string> selected;
  for (int i = 1; i < argc; ++i) {
    if (!criteria.count(argv[i])) {
      std::cerr << "unknown criterion " << argv[i] << "\n";
      return 2;
    }
    selected.insert(argv[i]);
  }
  const int workers = DefaultWorkerCount();
  int failed = 0;
  for (const auto& [id, entry] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o{false, ""};
    try {
      o = entry.second(workers);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << entry.first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
