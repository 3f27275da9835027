#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "circcal/config.hpp"
#include "circcal/files.hpp"

namespace circcal {

// Subcommand implementations shared by the command-line tool and the tests.
// Each validates its inputs before any computation and throws circcal::Error.

struct CommandContext {
  int workers = 1;
  std::ostream* out = nullptr;  // progress and results; nullptr silences
  std::ostream* err = nullptr;  // warnings
};

/// Default file locations inside paths.output_dir.
std::filesystem::path ModelPath(const RunConfig& config);
std::filesystem::path ThetaPath(const RunConfig& config);
std::filesystem::path ReportPath(const RunConfig& config);
std::filesystem::path MeshPath(const RunConfig& config);
std::filesystem::path TruthPath(const RunConfig& config);
std::filesystem::path EvaluationPath(const RunConfig& config);

/// Photos of image_dir (sorted), checked against the rig view count and the
/// configured image size.
std::vector<std::filesystem::path> ViewImagePaths(const RunConfig& config);

/// Probability maps of every view under the color models.
std::vector<ProbabilityImage> LoadProbabilityViews(const RunConfig& config, const ColorModelPair& models, int workers);

/// Fits the two color models from the annotated photo and writes the model file.
ColorModelFile CmdFitColors(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model_out);

/// Objective at theta (default: the evenly spaced initial rig).
double CmdScore(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                const std::optional<std::filesystem::path>& theta);

/// Calibrates from theta0 (default: the evenly spaced initial rig), writes the
/// theta file and a fresh report.
CalibrationResult CmdCalibrate(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                               const std::optional<std::filesystem::path>& theta0);

/// Builds the mesh at theta, writes the PLY and appends its metrics to the report.
MeshMetrics CmdReconstruct(const RunConfig& config, const CommandContext& ctx, const std::filesystem::path& model,
                           const std::filesystem::path& theta);

MeshMetrics CmdMeasure(const std::filesystem::path& mesh, const CommandContext& ctx);

/// Renders the configured scenario as photos plus an annotation of view 0 and
/// writes the ground-truth theta. Probability maps go to `maps_dir` when given.
void CmdSynth(const RunConfig& config, const CommandContext& ctx, const std::optional<std::filesystem::path>& maps_dir);

/// Render, perturb, calibrate and score the configured scenario; writes the
/// evaluation report.
RecoveryScore CmdEvaluate(const RunConfig& config, const CommandContext& ctx);

/// Report sections shared by calibrate and evaluate.
void AddThetaSection(Report& report, const std::string& name, const RigParams& theta);
void AddCalibrationSection(Report& report, const CalibrationResult& result);
void AddConfigEcho(Report& report, const RunConfig& config);

}  // namespace circcal
