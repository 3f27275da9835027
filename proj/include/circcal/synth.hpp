#pragma once

#include <cstdint>
#include <vector>

#include "circcal/colormodel.hpp"
#include "circcal/cost.hpp"
#include "circcal/image.hpp"

namespace circcal {

struct Ellipsoid {
  Vec3 center = Vec3::Zero();
  Vec3 semi_axes = Vec3::Ones();
  Mat3 orientation = Mat3::Identity();  // columns are the body axes in world coordinates

  bool Contains(const Vec3& p) const;
  /// True when the ray origin + s * dir (s > 0) meets the solid.
  bool RayHits(const Vec3& origin, const Vec3& dir) const;
  /// Half-widths of the world-axis-aligned bounding box.
  Vec3 BoxHalfExtent() const;
};

struct Phantom {
  std::vector<Ellipsoid> components;

  bool Contains(const Vec3& p) const;
  bool RayHits(const Vec3& origin, const Vec3& dir) const;
};

/// Three overlapping ellipsoids shaped like a small larva lying along the
/// turntable axis, off-center and without rotational symmetry.
Phantom FishPhantom();

/// Throws kInvalidParameter for non-positive semi-axes or a phantom whose
/// bounding box leaves the grid.
void CheckPhantom(const Phantom& phantom, const VoxelGrid& grid);

struct NoiseSpec {
  double flip_rate = 0.0;  // probability of swapping pf/pb at a pixel, in [0, 0.5)
  int blur_radius = 0;     // box filter half-width in pixels
  std::uint64_t seed = 7;
};

struct ScenarioTruth {
  RigParams theta_gt;
  CameraRig rig;
  VoxelGrid grid;
  NoiseSpec noise;
  int image_width = 256;
  int image_height = 256;
};

/// Checks noise rates, image size and view count.
void CheckScenario(const ScenarioTruth& truth);

/// Silhouette masks (1 = ray through the pixel center meets the phantom) under
/// the ground-truth cameras, one per view.
std::vector<std::vector<std::uint8_t>> RenderSilhouettes(const Phantom& phantom, const ScenarioTruth& truth,
                                                         int workers = 1);

/// Probability maps of the ground-truth silhouettes: pf = 1 - eps on the
/// silhouette and eps elsewhere, then label flips and box blur per the noise
/// spec. Throws kNumeric when the phantom is invisible in every view.
std::vector<ProbabilityImage> RenderViews(const Phantom& phantom, const ScenarioTruth& truth, int workers = 1);

/// Probability maps from precomputed silhouettes (same noise model).
std::vector<ProbabilityImage> ViewsFromSilhouettes(const std::vector<std::vector<std::uint8_t>>& silhouettes,
                                                   const ScenarioTruth& truth);

/// Two-color photo of a silhouette with per-channel Gaussian color noise.
RgbImage RenderPhoto(const std::vector<std::uint8_t>& silhouette, int width, int height, const Rgb& fg_color,
                     const Rgb& bg_color, double color_sigma, std::uint64_t seed);

/// Label image for a silhouette: pixels whose (2 * margin + 1)^2 neighbourhood
/// is entirely inside get 255, entirely outside get 0, the rest 128 (ignored).
GrayImage AnnotationFromSilhouette(const std::vector<std::uint8_t>& silhouette, int width, int height, int margin = 2);

/// Indices (into rolls) of k distinct rolls drawn from the seed.
std::vector<std::size_t> PerturbIndices(std::size_t roll_count, std::size_t k, std::uint64_t seed);

/// Adds `delta` (rad) to k distinct seeded-random rolls.
RigParams Perturb(const RigParams& theta, std::size_t k, double delta, std::uint64_t seed);

struct RecoveryScore {
  double mae_roll_deg = 0.0;
  double max_roll_deg = 0.0;
  double yaw_err_deg = 0.0;
  double pitch_err_deg = 0.0;
  double trans_err_mm = 0.0;
  std::vector<double> roll_err_deg;  // shortest-arc absolute error per roll
};

/// Angle errors on the shortest arc, in degrees. Throws kInvalidParameter on
/// mismatched view counts.
RecoveryScore ScoreRecovery(const RigParams& estimate, const RigParams& truth);

/// Shortest-arc absolute difference of two angles given in degrees.
double AngularDistanceDeg(double a, double b);

/// Ground-truth rig for synthetic scenarios: the given shared tilt and trans,
/// and evenly spaced rolls (2 pi / N apart) each offset by seeded jitter drawn
/// uniformly from [-roll_jitter, roll_jitter]. Angles in radians.
RigParams ScenarioTheta(int view_count, double yaw, double pitch, double trans, double roll_jitter,
                        std::uint64_t seed);

}  // namespace circcal
