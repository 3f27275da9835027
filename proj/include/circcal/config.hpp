#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "circcal/camera.hpp"
#include "circcal/cost.hpp"
#include "circcal/optimizer.hpp"
#include "circcal/reconstruct.hpp"
#include "circcal/synth.hpp"
#include "circcal/voxelgrid.hpp"

namespace circcal {

struct PathsConfig {
  std::filesystem::path image_dir = "images";
  std::filesystem::path annotation_image;  // empty: first PNG of image_dir
  std::filesystem::path annotation_labels = "labels.png";
  std::filesystem::path output_dir = "out";
};

struct IntrinsicsConfig {
  double focal_length = 17.6;           // mm
  double scale_x = 1.0 / 0.0055;        // px / mm
  double scale_y = 1.0 / 0.0055;        // px / mm
  double principal_x = 127.5;           // px
  double principal_y = 127.5;           // px
  int image_width = 256;
  int image_height = 256;
};

struct GridConfig {
  Vec3 center = Vec3::Zero();
  Vec3 half_extent = Vec3::Constant(1.5);
  std::array<int, 3> resolution{64, 64, 64};
};

struct RigConfig {
  int views = 36;
  double delta_omega_deg = 0.0;  // 0: 360 / views
  double nominal_distance = 40.0;  // mm

  double DeltaOmegaDeg() const { return delta_omega_deg != 0.0 ? delta_omega_deg : 360.0 / views; }
};

struct ScenarioConfig {
  std::string phantom = "fish";
  double yaw_deg = 1.5;
  double pitch_deg = -2.0;
  double trans = 0.5;  // mm
  double roll_jitter_deg = 1.0;
  std::uint64_t truth_seed = 11;
  int perturb_count = 10;
  double perturb_delta_deg = 10.0;
  std::uint64_t perturb_seed = 5;
  double flip_rate = 0.0;
  int blur_radius = 0;
  std::uint64_t noise_seed = 7;
  Rgb fg_color = Rgb(0.85, 0.55, 0.35);
  Rgb bg_color = Rgb(0.15, 0.2, 0.3);
  double photo_noise = 0.03;
};

struct ReconstructConfig {
  double iso = 0.5;
  PlyFormat ply_format = PlyFormat::kBinaryLittleEndian;
};

struct RunConfig {
  PathsConfig paths;
  IntrinsicsConfig intrinsics;
  GridConfig grid;
  RigConfig rig;
  CostConfig cost;
  ESConfig es;  // angles in radians; es.seed mirrors `seed`
  ScenarioConfig scenario;
  ReconstructConfig reconstruct;
  std::uint64_t seed = 1;
};

/// Defaults used when a key is absent. The ES leaves trans fixed.
RunConfig DefaultConfig();

/// Parses the sectioned key = value grammar. Absent keys keep their defaults;
/// unknown sections or keys and malformed values throw kInvalidParameter.
/// Relative paths are resolved against `base_dir`.
RunConfig ParseConfig(std::istream& in, const std::filesystem::path& base_dir = {});

/// Reads and parses a configuration file (kIo when unreadable), then
/// validates it.
RunConfig LoadConfig(const std::filesystem::path& path);

/// Canonical text form; ParseConfig(FormatConfig(c)) == c for numeric fields.
std::string FormatConfig(const RunConfig& config);

/// Checks every numeric field against the invariants of the module that
/// consumes it. Throws kInvalidParameter naming the offending key.
void ValidateConfig(const RunConfig& config);

CameraIntrinsics MakeIntrinsics(const RunConfig& config);
CameraRig MakeRig(const RunConfig& config);
VoxelGrid MakeGrid(const RunConfig& config);
ScenarioTruth MakeScenario(const RunConfig& config);
Phantom MakePhantom(const RunConfig& config);

/// Shortest round-trip decimal form ("%.17g").
std::string FormatDouble(double value);

}  // namespace circcal
