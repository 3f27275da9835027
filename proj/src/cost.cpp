#include "circcal/cost.hpp"

#include <algorithm>
#include <cmath>

#include "circcal/error.hpp"
#include "circcal/parallel.hpp"

namespace circcal {

std::string ToString(SamplingMode mode) { return mode == SamplingMode::kNearest ? "nearest" : "bilinear"; }

std::string ToString(OutOfBoundsPolicy policy) {
  return policy == OutOfBoundsPolicy::kBackground ? "background" : "ignore";
}

std::string ToString(VoxelSupport support) { return support == VoxelSupport::kBall ? "ball" : "box"; }

VoxelSupport ParseVoxelSupport(const std::string& text) {
  if (text == "ball") return VoxelSupport::kBall;
  if (text == "box") return VoxelSupport::kBox;
  throw InvalidParameter("unknown voxel support '" + text + "' (expected ball|box)");
}

namespace {

struct Ball {
  Vec3 center;
  double radius;
};

Ball InscribedBall(const VoxelGrid& g) {
  const Vec3 size(g.dims[0] * g.spacing, g.dims[1] * g.spacing, g.dims[2] * g.spacing);
  return {g.origin + 0.5 * size, 0.5 * size.minCoeff()};
}

}  // namespace

bool InSupport(const VoxelGrid& grid, VoxelSupport support, int i, int j, int k) {
  if (support == VoxelSupport::kBox) return true;
  const Ball b = InscribedBall(grid);
  return (grid.Center(i, j, k) - b.center).squaredNorm() <= b.radius * b.radius;
}

SamplingMode ParseSamplingMode(const std::string& text) {
  if (text == "nearest") return SamplingMode::kNearest;
  if (text == "bilinear") return SamplingMode::kBilinear;
  throw InvalidParameter("unknown sampling mode '" + text + "' (expected nearest|bilinear)");
}

OutOfBoundsPolicy ParseOutOfBoundsPolicy(const std::string& text) {
  if (text == "background") return OutOfBoundsPolicy::kBackground;
  if (text == "ignore") return OutOfBoundsPolicy::kIgnore;
  throw InvalidParameter("unknown out-of-bounds policy '" + text + "' (expected background|ignore)");
}

double PairwiseSum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return PairwiseSum(values.first(half)) + PairwiseSum(values.subspan(half));
}

namespace {

void CheckEpsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw InvalidParameter("probability epsilon must lie in (0, 0.5)");
}

// Clamped fused evidence from the per-view log sums of one voxel.
struct FusedLog {
  double log_pf;
  double log_pb;
};

inline FusedLog Fuse(double sum_log_pf, double sum_log_not_pb, double inv_n, double log_eps,
                     double log_one_minus_eps, double eps) {
  const double log_pf = std::clamp(sum_log_pf * inv_n, log_eps, log_one_minus_eps);
  const double pb = std::clamp(-std::expm1(sum_log_not_pb * inv_n), eps, 1.0 - eps);
  return {log_pf, std::log(pb)};
}

}  // namespace

VoxelEvidence JointEvidence(std::span<const double> pf, std::span<const double> pb, double epsilon) {
  CheckEpsilon(epsilon);
  if (pf.empty() || pb.empty()) throw InvalidParameter("joint evidence needs at least one view");
  if (pf.size() != pb.size()) throw InvalidParameter("pf and pb lists differ in length");
  double sf = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < pf.size(); ++i) {
    if (!(pf[i] >= 0.0 && pf[i] <= 1.0) || !(pb[i] >= 0.0 && pb[i] <= 1.0))
      throw InvalidParameter("probabilities must lie in [0, 1]");
    sf += std::log(pf[i]);
    sb += std::log1p(-pb[i]);
  }
  const double inv_n = 1.0 / static_cast<double>(pf.size());
  const FusedLog f = Fuse(sf, sb, inv_n, std::log(epsilon), std::log1p(-epsilon), epsilon);
  return {std::exp(f.log_pf), std::exp(f.log_pb)};
}

// Per-voxel log sums of one y-slab, indexed i + nx * k.
struct CostEvaluator::SlabSums {
  std::vector<double> log_pf;
  std::vector<double> log_not_pb;
  std::vector<int> visible;

  explicit SlabSums(std::size_t n) : log_pf(n, 0.0), log_not_pb(n, 0.0), visible(n, 0) {}
};

CostEvaluator::CostEvaluator(std::vector<ProbabilityImage> views, VoxelGrid grid, CameraRig rig, CostConfig config)
    : views_(std::move(views)), grid_(grid), rig_(rig), config_(config) {
  CheckGrid(grid_);
  CheckEpsilon(config_.epsilon);
  if (views_.empty()) throw InvalidParameter("cost evaluation needs at least one view");
  width_ = views_.front().width;
  height_ = views_.front().height;
  if (width_ <= 0 || height_ <= 0) throw InvalidParameter("probability images must be nonempty");
  for (const auto& v : views_) {
    if (v.width != width_ || v.height != height_) throw InvalidParameter("all views must share one image size");
    const std::size_t n = static_cast<std::size_t>(width_) * height_;
    if (v.pf.size() != n || v.pb.size() != n) throw InvalidParameter("probability image buffers have the wrong size");
  }
  log_eps_ = std::log(config_.epsilon);
  log_one_minus_eps_ = std::log1p(-config_.epsilon);

  if (config_.sampling == SamplingMode::kNearest) {
    tables_.reserve(views_.size());
    for (const auto& v : views_) {
      std::vector<LogPair> t(v.pf.size());
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = {std::log(v.pf[i]), std::log1p(-v.pb[i])};
      tables_.push_back(std::move(t));
    }
  }

  // Support rows depend only on the grid, so they are resolved once.
  const int nx = grid_.dims[0], ny = grid_.dims[1], nz = grid_.dims[2];
  support_rows_.resize(static_cast<std::size_t>(ny) * nz);
  for (int j = 0; j < ny; ++j) {
    for (int k = 0; k < nz; ++k) {
      int lo = 0, hi = nx;
      if (config_.support != VoxelSupport::kBox) {
        // Membership is convex along a row: trim from both ends.
        while (lo < hi && !InSupport(grid_, config_.support, lo, j, k)) ++lo;
        while (hi > lo && !InSupport(grid_, config_.support, hi - 1, j, k)) --hi;
      }
      support_rows_[static_cast<std::size_t>(j) * nz + k] = {lo, hi};
    }
  }
}

std::vector<ProjectionMatrix> CostEvaluator::Projections(const RigParams& theta) const {
  if (theta.ViewCount() != views_.size())
    throw InvalidParameter("rig parameters describe " + std::to_string(theta.ViewCount()) + " views but " +
                           std::to_string(views_.size()) + " probability images were given");
  if (!theta.IsFinite()) throw NumericError("rig parameters are not finite");
  return BuildProjections(theta, rig_.intrinsics, rig_.nominal_distance);
}

void CostEvaluator::AccumulateSlab(int j, std::span<const ProjectionMatrix> projections, bool whole_lattice,
                                   SlabSums& sums) const {
  const int nx = grid_.dims[0], nz = grid_.dims[2];
  const bool ignore_oob = config_.out_of_bounds == OutOfBoundsPolicy::kIgnore;
  const double oob_log_pf = log_eps_;
  const double oob_log_not_pb = std::log1p(-(1.0 - config_.epsilon));
  const double y = grid_.AxisCenter(1, j);
  const double umax = width_ - 0.5, vmax = height_ - 0.5;

  std::vector<double> ax0(nx), ax1(nx), ax2(nx);
  for (std::size_t view = 0; view < projections.size(); ++view) {
    const ProjectionMatrix& p = projections[view];
    for (int i = 0; i < nx; ++i) {
      const double x = grid_.AxisCenter(0, i);
      ax0[i] = p(0, 0) * x;
      ax1[i] = p(1, 0) * x;
      ax2[i] = p(2, 0) * x;
    }
    const LogPair* table = config_.sampling == SamplingMode::kNearest ? tables_[view].data() : nullptr;
    const ProbabilityImage& img = views_[view];

    for (int k = 0; k < nz; ++k) {
      const double z = grid_.AxisCenter(2, k);
      const double b0 = p(0, 1) * y + p(0, 2) * z + p(0, 3);
      const double b1 = p(1, 1) * y + p(1, 2) * z + p(1, 3);
      const double b2 = p(2, 1) * y + p(2, 2) * z + p(2, 3);
      const std::size_t row = static_cast<std::size_t>(k) * nx;
      double* sf = sums.log_pf.data() + row;
      double* sb = sums.log_not_pb.data() + row;
      int* vis = sums.visible.data() + row;
      const auto [i_begin, i_end] =
          whole_lattice ? std::pair<int, int>{0, nx} : support_rows_[static_cast<std::size_t>(j) * nz + k];

      for (int i = i_begin; i < i_end; ++i) {
        const double h2 = ax2[i] + b2;
        bool inside = false;
        double lpf = oob_log_pf, lnpb = oob_log_not_pb;
        if (h2 > kDepthEpsilon) {
          const double inv = 1.0 / h2;
          const double u = (ax0[i] + b0) * inv;
          const double v = (ax1[i] + b1) * inv;
          if (u >= -0.5 && u < umax && v >= -0.5 && v < vmax) {
            inside = true;
            if (table) {
              const auto col = static_cast<std::size_t>(u + 0.5);
              const auto rw = static_cast<std::size_t>(v + 0.5);
              const LogPair& e = table[rw * static_cast<std::size_t>(width_) + col];
              lpf = e.log_pf;
              lnpb = e.log_not_pb;
            } else {
              const double uc = std::clamp(u, 0.0, width_ - 1.0);
              const double vc = std::clamp(v, 0.0, height_ - 1.0);
              const int x0 = std::min(static_cast<int>(uc), width_ - 1);
              const int y0 = std::min(static_cast<int>(vc), height_ - 1);
              const int x1 = std::min(x0 + 1, width_ - 1);
              const int y1 = std::min(y0 + 1, height_ - 1);
              const double fx = uc - x0, fy = vc - y0;
              const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
              const std::size_t i00 = img.Index(x0, y0), i10 = img.Index(x1, y0);
              const std::size_t i01 = img.Index(x0, y1), i11 = img.Index(x1, y1);
              const double pf = w00 * img.pf[i00] + w10 * img.pf[i10] + w01 * img.pf[i01] + w11 * img.pf[i11];
              const double pb = w00 * img.pb[i00] + w10 * img.pb[i10] + w01 * img.pb[i01] + w11 * img.pb[i11];
              lpf = std::log(pf);
              lnpb = std::log1p(-pb);
            }
          }
        }
        if (inside) {
          ++vis[i];
        } else if (ignore_oob) {
          continue;
        }
        sf[i] += lpf;
        sb[i] += lnpb;
      }
    }
  }
}

double CostEvaluator::Evaluate(const RigParams& theta, int workers) const {
  const auto projections = Projections(theta);
  const int nx = grid_.dims[0], ny = grid_.dims[1], nz = grid_.dims[2];
  const std::size_t slab_size = static_cast<std::size_t>(nx) * nz;
  const double inv_n = 1.0 / static_cast<double>(views_.size());
  const bool ignore_oob = config_.out_of_bounds == OutOfBoundsPolicy::kIgnore;

  std::vector<double> slab_totals(ny, 0.0);
  std::vector<std::size_t> slab_visible(ny, 0);
  ParallelFor(static_cast<std::size_t>(ny), workers, [&](std::size_t slab) {
    const int j = static_cast<int>(slab);
    SlabSums sums(slab_size);
    AccumulateSlab(j, projections, false, sums);
    std::vector<double> contrib(slab_size, 0.0);
    std::size_t visible = 0;
    for (int k = 0; k < nz; ++k) {
      const auto [i_begin, i_end] = support_rows_[static_cast<std::size_t>(j) * nz + k];
      for (int x = i_begin; x < i_end; ++x) {
        const std::size_t i = static_cast<std::size_t>(k) * nx + x;
        const int seen = sums.visible[i];
        if (seen > 0) ++visible;
        if (ignore_oob && seen == 0) continue;
        const double w = ignore_oob ? 1.0 / seen : inv_n;
        const FusedLog f = Fuse(sums.log_pf[i], sums.log_not_pb[i], w, log_eps_, log_one_minus_eps_, config_.epsilon);
        contrib[i] = f.log_pf - f.log_pb;
      }
    }
    slab_totals[slab] = PairwiseSum(contrib);
    slab_visible[slab] = visible;
  });

  std::size_t visible = 0;
  for (auto v : slab_visible) visible += v;
  if (visible == 0) throw NumericError("degenerate configuration: no voxel projects into any view");
  return PairwiseSum(slab_totals);
}

std::vector<VoxelEvidence> CostEvaluator::Evidence(const RigParams& theta, int workers) const {
  const auto projections = Projections(theta);
  const int nx = grid_.dims[0], ny = grid_.dims[1], nz = grid_.dims[2];
  const std::size_t slab_size = static_cast<std::size_t>(nx) * nz;
  const double inv_n = 1.0 / static_cast<double>(views_.size());
  const bool ignore_oob = config_.out_of_bounds == OutOfBoundsPolicy::kIgnore;

  std::vector<VoxelEvidence> out(grid_.Count());
  std::vector<std::size_t> slab_visible(ny, 0);
  ParallelFor(static_cast<std::size_t>(ny), workers, [&](std::size_t slab) {
    const int j = static_cast<int>(slab);
    SlabSums sums(slab_size);
    AccumulateSlab(j, projections, true, sums);
    std::size_t visible = 0;
    for (int k = 0; k < nz; ++k) {
      for (int x = 0; x < nx; ++x) {
        const std::size_t i = static_cast<std::size_t>(k) * nx + x;
        const int seen = sums.visible[i];
        if (seen > 0) ++visible;
        VoxelEvidence& e = out[grid_.FlatIndex(x, j, k)];
        if (ignore_oob && seen == 0) {
          e = {config_.epsilon, 1.0 - config_.epsilon};
          continue;
        }
        const double w = ignore_oob ? 1.0 / seen : inv_n;
        const FusedLog f = Fuse(sums.log_pf[i], sums.log_not_pb[i], w, log_eps_, log_one_minus_eps_, config_.epsilon);
        e = {std::exp(f.log_pf), std::exp(f.log_pb)};
      }
    }
    slab_visible[slab] = visible;
  });
  std::size_t visible = 0;
  for (auto v : slab_visible) visible += v;
  if (visible == 0) throw NumericError("degenerate configuration: no voxel projects into any view");
  return out;
}

double EvaluateTheta(const RigParams& theta, const std::vector<ProbabilityImage>& views, const VoxelGrid& grid,
                     const CameraRig& rig, const CostConfig& config, int workers) {
  return CostEvaluator(views, grid, rig, config).Evaluate(theta, workers);
}

}  // namespace circcal
