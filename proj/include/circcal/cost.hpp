#pragma once

#include <span>
#include <string>
#include <vector>

#include "circcal/camera.hpp"
#include "circcal/colormodel.hpp"
#include "circcal/voxelgrid.hpp"

namespace circcal {

/// Fixed camera quantities shared by every view of the rig.
struct CameraRig {
  CameraIntrinsics intrinsics;
  double nominal_distance = 1.0;  // mm from the camera center to the turntable axis at trans == 0
};

enum class SamplingMode { kNearest, kBilinear };

/// How a view treats a voxel that projects outside its image (or behind the camera).
enum class OutOfBoundsPolicy {
  kBackground,  // contributes pf = eps, pb = 1 - eps
  kIgnore,      // omitted from that voxel's product; voxels seen by no view are skipped
};

/// Which lattice voxels enter the objective sum.
enum class VoxelSupport {
  kBall,  // centers inside the ball inscribed in the grid (radius = half the shortest side)
  kBox,   // every voxel of the lattice
};

struct CostConfig {
  SamplingMode sampling = SamplingMode::kNearest;
  double epsilon = kProbabilityEpsilon;
  OutOfBoundsPolicy out_of_bounds = OutOfBoundsPolicy::kBackground;
  VoxelSupport support = VoxelSupport::kBall;
};

std::string ToString(SamplingMode mode);
std::string ToString(OutOfBoundsPolicy policy);
std::string ToString(VoxelSupport support);
SamplingMode ParseSamplingMode(const std::string& text);
OutOfBoundsPolicy ParseOutOfBoundsPolicy(const std::string& text);
VoxelSupport ParseVoxelSupport(const std::string& text);

/// True when voxel (i, j, k) belongs to the support of `grid`.
bool InSupport(const VoxelGrid& grid, VoxelSupport support, int i, int j, int k);

struct VoxelEvidence {
  double pf = 0.5;  // fused foreground probability
  double pb = 0.5;  // fused background probability
};

/// Fuses one voxel's per-view probabilities:
///   Pf = (prod pf_i)^(1/N),  Pb = 1 - (prod (1 - pb_i))^(1/N),
/// both clamped to [epsilon, 1 - epsilon]. Evaluated in log space.
VoxelEvidence JointEvidence(std::span<const double> pf, std::span<const double> pb,
                            double epsilon = kProbabilityEpsilon);

/// Precomputes per-view lookup tables once so that the objective can be
/// evaluated for many rig parameter vectors.
class CostEvaluator {
 public:
  CostEvaluator(std::vector<ProbabilityImage> views, VoxelGrid grid, CameraRig rig, CostConfig config = {});

  /// Sum over voxels of log Pf - log Pb. Throws kNumeric if no voxel is visible
  /// in any view. Bit-identical for any worker count.
  double Evaluate(const RigParams& theta, int workers = 1) const;

  /// Per-voxel fused evidence in flat grid order, for every lattice voxel
  /// (the support only restricts the objective sum).
  std::vector<VoxelEvidence> Evidence(const RigParams& theta, int workers = 1) const;

  const VoxelGrid& grid() const { return grid_; }
  const CameraRig& rig() const { return rig_; }
  const CostConfig& config() const { return config_; }
  std::size_t ViewCount() const { return views_.size(); }
  int ImageWidth() const { return width_; }
  int ImageHeight() const { return height_; }

 private:
  struct LogPair {
    double log_pf;
    double log_not_pb;  // log(1 - pb)
  };

  struct SlabSums;
  /// Adds every view's log terms for the voxels of y-slab j.
  void AccumulateSlab(int j, std::span<const ProjectionMatrix> projections, bool whole_lattice,
                      SlabSums& sums) const;
  std::vector<ProjectionMatrix> Projections(const RigParams& theta) const;

  std::vector<ProbabilityImage> views_;
  std::vector<std::vector<LogPair>> tables_;
  std::vector<std::pair<int, int>> support_rows_;  // half-open i-range per (j, k), index j * nz + k
  VoxelGrid grid_;
  CameraRig rig_;
  CostConfig config_;
  int width_ = 0;
  int height_ = 0;
  double log_eps_ = 0.0;
  double log_one_minus_eps_ = 0.0;
};

/// One-shot objective evaluation; see CostEvaluator::Evaluate.
double EvaluateTheta(const RigParams& theta, const std::vector<ProbabilityImage>& views, const VoxelGrid& grid,
                     const CameraRig& rig, const CostConfig& config = {}, int workers = 1);

/// Pairwise (cascade) summation in a fixed association order.
double PairwiseSum(std::span<const double> values);

}  // namespace circcal
