// circcal: turntable camera calibration from silhouettes.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

#include "circcal/config.hpp"
#include "circcal/error.hpp"
#include "circcal/parallel.hpp"
#include "circcal/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kNumericFailure = 3, kIoFailure = 4 };

int ExitFor(circcal::ErrorKind kind) {
  switch (kind) {
    case circcal::ErrorKind::kInvalidParameter: return kValidation;
    case circcal::ErrorKind::kNumeric: return kNumericFailure;
    case circcal::ErrorKind::kIo: return kIoFailure;
  }
  return kValidation;
}

std::optional<std::filesystem::path> Optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turntable camera calibration and reconstruction from silhouettes"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = circcal::DefaultWorkerCount();
  app.add_option("-c,--config", config_path, "configuration file (defaults apply when omitted)");
  app.add_option("-j,--workers", workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  std::string model, theta, out, mesh, maps;

  auto* fit = app.add_subcommand("fit-colors", "fit the foreground/background color models");
  fit->add_option("-o,--out", out, "model file (default <output_dir>/model.txt)");

  auto* score = app.add_subcommand("score", "evaluate the objective at a rig");
  score->add_option("-m,--model", model, "color model file");
  score->add_option("-t,--theta", theta, "rig file (default: evenly spaced rolls)");

  auto* calibrate = app.add_subcommand("calibrate", "estimate the rig parameters");
  calibrate->add_option("-m,--model", model, "color model file");
  calibrate->add_option("-t,--theta0", theta, "starting rig file (default: evenly spaced rolls)");

  auto* reconstruct = app.add_subcommand("reconstruct", "build and measure the mesh at a rig");
  reconstruct->add_option("-m,--model", model, "color model file");
  reconstruct->add_option("-t,--theta", theta, "rig file (default <output_dir>/theta.txt)");

  auto* measure = app.add_subcommand("measure", "volume and surface area of a PLY mesh");
  measure->add_option("mesh", mesh, "PLY file")->required();

  auto* synth = app.add_subcommand("synth", "render the synthetic scenario as photos");
  synth->add_option("--maps", maps, "also write the probability maps to this directory");

  auto* evaluate = app.add_subcommand("evaluate", "perturb, calibrate and score the synthetic scenario");
  auto* defaults = app.add_subcommand("print-defaults", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (defaults->parsed()) {
      std::cout << circcal::FormatConfig(circcal::DefaultConfig());
      return kOk;
    }
    circcal::CommandContext ctx{workers, &std::cout, &std::cerr};
    if (measure->parsed()) {
      circcal::CmdMeasure(mesh, ctx);
      return kOk;
    }

    circcal::RunConfig config;
    if (config_path.empty()) {
      config = circcal::DefaultConfig();
      circcal::ValidateConfig(config);
    } else {
      config = circcal::LoadConfig(config_path);
    }
    const std::filesystem::path model_path = model.empty() ? circcal::ModelPath(config) : std::filesystem::path(model);

    if (fit->parsed()) {
      circcal::CmdFitColors(config, ctx, out.empty() ? circcal::ModelPath(config) : std::filesystem::path(out));
    } else if (score->parsed()) {
      circcal::CmdScore(config, ctx, model_path, Optional(theta));
    } else if (calibrate->parsed()) {
      circcal::CmdCalibrate(config, ctx, model_path, Optional(theta));
    } else if (reconstruct->parsed()) {
      circcal::CmdReconstruct(config, ctx, model_path,
                              theta.empty() ? circcal::ThetaPath(config) : std::filesystem::path(theta));
    } else if (synth->parsed()) {
      circcal::CmdSynth(config, ctx, Optional(maps));
    } else if (evaluate->parsed()) {
      circcal::CmdEvaluate(config, ctx);
    }
    return kOk;
  } catch (const circcal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitFor(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kNumericFailure;
  }
}
