#include "circcal/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "circcal/error.hpp"
#include "circcal/image.hpp"

namespace circcal {

namespace {

std::ostream& Null() {
  static std::ostringstream sink;
  sink.str({});
  return sink;
}

std::ostream& Out(const CommandContext& ctx) { return ctx.out ? *ctx.out : Null(); }
std::ostream& Err(const CommandContext& ctx) { return ctx.err ? *ctx.err : Null(); }

void RequireFile(const std::filesystem::path& path, const std::string& what) {
  if (path.empty()) throw InvalidParameter(what + " path is not set");
  if (!std::filesystem::is_regular_file(path)) throw InvalidParameter(what + " not found: " + path.string());
}

// Single-threaded candidate evaluations let the optimizer parallelize across
// the population instead.
Objective MakeObjective(const CostEvaluator& evaluator) {
  return [&evaluator](const RigParams& theta) { return evaluator.Evaluate(theta, 1); };
}

ESConfig SearchConfig(const RunConfig& config, int workers) {
  ESConfig es = config.es;
  es.seed = config.seed;
  es.workers = workers;
  return es;
}

RigParams InitialTheta(const RunConfig& config) {
  return InitializeTheta(config.rig.views, DegToRad(config.rig.DeltaOmegaDeg()));
}

RigParams LoadThetaFor(const RunConfig& config, const std::filesystem::path& path) {
  const RigParams theta = ReadTheta(path);
  if (theta.ViewCount() != static_cast<std::size_t>(config.rig.views))
    throw InvalidParameter(path.string() + " describes " + std::to_string(theta.ViewCount()) +
                           " views but the configuration has " + std::to_string(config.rig.views));
  return theta;
}

std::string Fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::filesystem::path ModelPath(const RunConfig& c) { return c.paths.output_dir / "model.txt"; }
std::filesystem::path ThetaPath(const RunConfig& c) { return c.paths.output_dir / "theta.txt"; }
std::filesystem::path ReportPath(const RunConfig& c) { return c.paths.output_dir / "report.txt"; }
std::filesystem::path MeshPath(const RunConfig& c) { return c.paths.output_dir / "mesh.ply"; }
std::filesystem::path TruthPath(const RunConfig& c) { return c.paths.output_dir / "theta_gt.txt"; }
std::filesystem::path EvaluationPath(const RunConfig& c) { return c.paths.output_dir / "evaluation.txt"; }

std::vector<std::filesystem::path> ViewImagePaths(const RunConfig& config) {
  if (!std::filesystem::is_directory(config.paths.image_dir))
    throw InvalidParameter("image directory not found: " + config.paths.image_dir.string());
  const auto files = ListPngFiles(config.paths.image_dir);
  if (files.size() != static_cast<std::size_t>(config.rig.views)) {
    std::string listing;
    for (const auto& f : files) listing += "\n  " + f.filename().string();
    throw InvalidParameter("expected " + std::to_string(config.rig.views) + " view images in " +
                           config.paths.image_dir.string() + ", found " + std::to_string(files.size()) +
                           (files.empty() ? std::string() : ":" + listing));
  }
  return files;
}

std::vector<ProbabilityImage> LoadProbabilityViews(const RunConfig& config, const ColorModelPair& models,
                                                   int workers) {
  const auto files = ViewImagePaths(config);
  std::vector<ProbabilityImage> views;
  views.reserve(files.size());
  for (const auto& f : files) {
    const RgbImage img = ReadPngRgb(f);
    if (img.width != config.intrinsics.image_width || img.height != config.intrinsics.image_height)
      throw InvalidParameter(f.string() + " is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                             " but the configuration expects " + std::to_string(config.intrinsics.image_width) + "x" +
                             std::to_string(config.intrinsics.image_height));
    views.push_back(ProbabilityMap(img, models.foreground, models.background, workers));
  }
  return views;
}

ColorModelFile CmdFitColors(const RunConfig& config, const CommandContext& ctx,
                            const std::filesystem::path& model_out) {
  std::filesystem::path photo = config.paths.annotation_image;
  if (photo.empty()) {
    if (!std::filesystem::is_directory(config.paths.image_dir))
      throw InvalidParameter("image directory not found: " + config.paths.image_dir.string());
    const auto files = ListPngFiles(config.paths.image_dir);
    if (files.empty()) throw InvalidParameter("no PNG images in " + config.paths.image_dir.string());
    photo = files.front();
  }
  RequireFile(photo, "annotated image");
  RequireFile(config.paths.annotation_labels, "annotation label image");

  const RgbImage image = ReadPngRgb(photo);
  const GrayImage labels = ReadPngGray(config.paths.annotation_labels);
  const AnnotationSamples samples = CollectSamples(image, labels);
  for (const auto& [name, n] : {std::pair{"foreground", samples.foreground.size()},
                                std::pair{"background", samples.background.size()}}) {
    if (n < 4)
      throw InvalidParameter(std::string("insufficient samples: the ") + name + " class has " + std::to_string(n) +
                             " labelled pixels, at least 4 are needed");
  }
  ColorModelFile model;
  model.models.foreground = FitGaussian(samples.foreground);
  model.models.background = FitGaussian(samples.background);
  model.foreground_samples = samples.foreground.size();
  model.background_samples = samples.background.size();
  EnsureDirectory(model_out.parent_path());
  WriteModel(model_out, model);
  Out(ctx) << "foreground samples: " << model.foreground_samples << "\n"
           << "background samples: " << model.background_samples << "\n"
           << "model written to " << model_out.string() << "\n";
  return model;
}

double CmdScore(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                const std::optional<std::filesystem::path>& theta) {
  RequireFile(model, "color model");
  if (theta) RequireFile(*theta, "theta file");
  const RigParams t = theta ? LoadThetaFor(config, *theta) : InitialTheta(config);
  const ColorModelFile m = ReadModel(model);
  const CostEvaluator evaluator(LoadProbabilityViews(config, m.models, ctx.workers), MakeGrid(config),
                                MakeRig(config), config.cost);
  const double l = evaluator.Evaluate(t, ctx.workers);
  Out(ctx) << "loglik = " << FormatDouble(l) << "\n";
  return l;
}

void AddThetaSection(Report& report, const std::string& name, const RigParams& theta) {
  report.Section(name);
  report.Add("views", theta.ViewCount());
  report.Add("yaw_deg", RadToDeg(theta.yaw));
  report.Add("pitch_deg", RadToDeg(theta.pitch));
  report.Add("trans_mm", theta.trans);
  for (std::size_t i = 0; i < theta.rolls.size(); ++i) {
    char key[32];
    std::snprintf(key, sizeof key, "roll_deg.%02zu", i + 1);
    report.Add(key, RadToDeg(WrapAngle(theta.rolls[i])));
  }
}

void AddCalibrationSection(Report& report, const CalibrationResult& result) {
  report.Section("result");
  report.Add("loglik", result.final_loglik);
  report.Add("generations", result.generations_used);
  report.Add("convergence", std::string(result.convergence == Convergence::kConverged ? "converged" : "max_gen_reached"));
  report.Add("evaluations", static_cast<long long>(result.evaluations));
}

void AddConfigEcho(Report& report, const RunConfig& config) {
  std::istringstream in(FormatConfig(config));
  std::string text;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.front() == '[') line = "[config." + line.substr(1);
    text += line + "\n";
  }
  report.AddText("\n" + text);
}

CalibrationResult CmdCalibrate(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                               const std::optional<std::filesystem::path>& theta0) {
  RequireFile(model, "color model");
  if (theta0) RequireFile(*theta0, "initial theta file");
  const RigParams start = theta0 ? LoadThetaFor(config, *theta0) : InitialTheta(config);
  const ColorModelFile m = ReadModel(model);
  EnsureDirectory(config.paths.output_dir);

  const CostEvaluator evaluator(LoadProbabilityViews(config, m.models, ctx.workers), MakeGrid(config),
                                MakeRig(config), config.cost);
  Out(ctx) << "calibrating " << config.rig.views << " views, L(theta0) = " << FormatDouble(evaluator.Evaluate(start, ctx.workers))
           << "\n";
  const CalibrationResult result = Calibrate(MakeObjective(evaluator), start, SearchConfig(config, ctx.workers));

  WriteTheta(ThetaPath(config), result.theta_star);
  Report report;
  report.Section("run");
  report.Add("command", std::string("calibrate"));
  report.Add("seed", static_cast<long long>(config.seed));
  AddCalibrationSection(report, result);
  AddThetaSection(report, "theta", result.theta_star);
  AddConfigEcho(report, config);
  WriteReport(ReportPath(config), report);
  Out(ctx) << "L* = " << FormatDouble(result.final_loglik) << " after " << result.generations_used << " generations ("
           << (result.convergence == Convergence::kConverged ? "converged" : "max generations reached") << ")\n"
           << "theta written to " << ThetaPath(config).string() << "\n";
  return result;
}

MeshMetrics CmdReconstruct(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                           const std::filesystem::path& theta) {
  RequireFile(model, "color model");
  RequireFile(theta, "theta file");
  const RigParams t = LoadThetaFor(config, theta);
  const ColorModelFile m = ReadModel(model);
  EnsureDirectory(config.paths.output_dir);

  const OccupancyVolume volume = BuildOccupancy(t, LoadProbabilityViews(config, m.models, ctx.workers),
                                                MakeGrid(config), MakeRig(config), config.cost, ctx.workers);
  const TriangleMesh mesh = ExtractMesh(volume, config.reconstruct.iso, ctx.workers);
  if (mesh.Empty()) Err(ctx) << "warning: the isosurface is empty; writing an empty mesh\n";
  WritePly(MeshPath(config), mesh, config.reconstruct.ply_format);
  const MeshMetrics metrics = Measure(mesh);
  if (!mesh.Empty() && !metrics.watertight)
    Err(ctx) << "warning: the mesh is not watertight (it touches the grid boundary); volume is unreliable\n";

  Report report;
  report.Section("mesh");
  report.Add("vertices", mesh.vertices.size());
  report.Add("triangles", mesh.triangles.size());
  report.Add("volume_mm3", metrics.volume);
  report.Add("surface_area_mm2", metrics.surface_area);
  report.Add("watertight", std::string(metrics.watertight ? "yes" : "no"));
  AppendReport(ReportPath(config), report);
  Out(ctx) << "V = " << FormatDouble(metrics.volume) << " mm^3, SA = " << FormatDouble(metrics.surface_area)
           << " mm^2\nmesh written to " << MeshPath(config).string() << "\n";
  return metrics;
}

MeshMetrics CmdMeasure(const std::filesystem::path& mesh_path, const CommandContext& ctx) {
  RequireFile(mesh_path, "mesh");
  const TriangleMesh mesh = ReadPly(mesh_path);
  const MeshMetrics m = Measure(mesh);
  Out(ctx) << "volume_mm3 = " << FormatDouble(m.volume) << "\n"
           << "surface_area_mm2 = " << FormatDouble(m.surface_area) << "\n"
           << "watertight = " << (m.watertight ? "yes" : "no") << "\n";
  if (!m.watertight) Err(ctx) << "warning: the mesh is not watertight; volume is unreliable\n";
  return m;
}

void CmdSynth(const RunConfig& config, const CommandContext& ctx, const std::optional<std::filesystem::path>& maps_dir) {
  const ScenarioTruth truth = MakeScenario(config);
  const Phantom phantom = MakePhantom(config);
  EnsureDirectory(config.paths.image_dir);
  EnsureDirectory(config.paths.output_dir);
  EnsureDirectory(config.paths.annotation_labels.parent_path());
  if (maps_dir) EnsureDirectory(*maps_dir);

  const auto silhouettes = RenderSilhouettes(phantom, truth, ctx.workers);
  const int w = truth.image_width, h = truth.image_height;
  const bool visible = std::any_of(silhouettes.begin(), silhouettes.end(), [](const auto& m) {
    return std::find(m.begin(), m.end(), 1) != m.end();
  });
  if (!visible) throw NumericError("degenerate scenario: the phantom is not visible in any view");
  for (std::size_t v = 0; v < silhouettes.size(); ++v) {
    char name[32];
    std::snprintf(name, sizeof name, "view_%03zu.png", v);
    WritePng(config.paths.image_dir / name, RenderPhoto(silhouettes[v], w, h, config.scenario.fg_color,
                                                        config.scenario.bg_color, config.scenario.photo_noise,
                                                        config.scenario.noise_seed + v));
  }
  WritePng(config.paths.annotation_labels, AnnotationFromSilhouette(silhouettes[0], w, h));
  if (maps_dir) {
    const auto maps = ViewsFromSilhouettes(silhouettes, truth);
    for (std::size_t v = 0; v < maps.size(); ++v) {
      char name[32];
      std::snprintf(name, sizeof name, "pf_%03zu.png", v);
      WritePng(*maps_dir / name, ToGray(maps[v]));
    }
  }
  WriteTheta(TruthPath(config), truth.theta_gt);
  Out(ctx) << "rendered " << silhouettes.size() << " views to " << config.paths.image_dir.string() << "\n"
           << "ground truth written to " << TruthPath(config).string() << "\n";
}

RecoveryScore CmdEvaluate(const RunConfig& config, const CommandContext& ctx) {
  const ScenarioTruth truth = MakeScenario(config);
  const Phantom phantom = MakePhantom(config);
  EnsureDirectory(config.paths.output_dir);

  const CostEvaluator evaluator(RenderViews(phantom, truth, ctx.workers), truth.grid, truth.rig, config.cost);
  const RigParams start = Perturb(truth.theta_gt, static_cast<std::size_t>(config.scenario.perturb_count),
                                  DegToRad(config.scenario.perturb_delta_deg), config.scenario.perturb_seed);
  const double l_gt = evaluator.Evaluate(truth.theta_gt, ctx.workers);
  Out(ctx) << "L(theta_gt) = " << FormatDouble(l_gt) << "\n";
  const CalibrationResult result = Calibrate(MakeObjective(evaluator), start, SearchConfig(config, ctx.workers));
  const RecoveryScore score = ScoreRecovery(result.theta_star, truth.theta_gt);
  const RecoveryScore initial = ScoreRecovery(start, truth.theta_gt);

  Report report;
  report.Section("run");
  report.Add("command", std::string("evaluate"));
  report.Add("seed", static_cast<long long>(config.seed));
  report.Add("loglik_truth", l_gt);
  AddCalibrationSection(report, result);
  report.Section("recovery");
  report.Add("roll_mae_deg", score.mae_roll_deg);
  report.Add("roll_max_deg", score.max_roll_deg);
  report.Add("yaw_err_deg", score.yaw_err_deg);
  report.Add("pitch_err_deg", score.pitch_err_deg);
  report.Add("trans_err_mm", score.trans_err_mm);
  report.Add("initial_roll_mae_deg", initial.mae_roll_deg);
  report.Section("rolls");
  report.AddText("# view = ground_truth_deg initial_deg estimate_deg error_deg");
  std::ostringstream table;
  table << "view  ground truth   initial  estimate   error\n";
  for (std::size_t i = 0; i < truth.theta_gt.rolls.size(); ++i) {
    const double gt = RadToDeg(WrapAngle(truth.theta_gt.rolls[i]));
    const double init = RadToDeg(WrapAngle(start.rolls[i]));
    const double est = RadToDeg(WrapAngle(result.theta_star.rolls[i]));
    char key[32];
    std::snprintf(key, sizeof key, "view.%02zu", i + 1);
    report.Add(key, FormatDouble(gt) + " " + FormatDouble(init) + " " + FormatDouble(est) + " " +
                        FormatDouble(score.roll_err_deg[i]));
    char row[128];
    std::snprintf(row, sizeof row, "%4zu  %12s  %8s  %8s  %6s\n", i + 1, Fixed(gt, 2).c_str(), Fixed(init, 2).c_str(),
                  Fixed(est, 2).c_str(), Fixed(score.roll_err_deg[i], 2).c_str());
    table << row;
  }
  AddThetaSection(report, "theta_truth", truth.theta_gt);
  AddThetaSection(report, "theta", result.theta_star);
  AddConfigEcho(report, config);
  WriteReport(EvaluationPath(config), report);

  Out(ctx) << table.str() << "roll MAE = " << Fixed(score.mae_roll_deg, 3) << " deg, max = " << Fixed(score.max_roll_deg, 3)
           << " deg, generations = " << result.generations_used << "\nreport written to "
           << EvaluationPath(config).string() << "\n";
  return score;
}

}  // namespace circcal
