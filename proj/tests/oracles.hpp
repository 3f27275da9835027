#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the optimised cost or meshing paths.

#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <vector>

#include "circcal/cost.hpp"
#include "circcal/reconstruct.hpp"

namespace circcal::oracle {

/// Eq. 3 by direct products and powers, clamped.
inline VoxelEvidence NaiveJointEvidence(const std::vector<double>& pf, const std::vector<double>& pb, double eps) {
  long double prod_f = 1.0L, prod_nb = 1.0L;
  for (std::size_t i = 0; i < pf.size(); ++i) {
    prod_f *= pf[i];
    prod_nb *= 1.0L - pb[i];
  }
  const long double inv_n = 1.0L / pf.size();
  long double f = std::pow(prod_f, inv_n);
  long double b = 1.0L - std::pow(prod_nb, inv_n);
  f = std::clamp<long double>(f, eps, 1.0L - eps);
  b = std::clamp<long double>(b, eps, 1.0L - eps);
  return {static_cast<double>(f), static_cast<double>(b)};
}

/// Flat index -> (i, j, k) by repeated division.
inline std::array<int, 3> DecomposeIndex(const VoxelGrid& g, std::size_t index) {
  const int i = static_cast<int>(index % g.dims[0]);
  const std::size_t rest = index / g.dims[0];
  return {i, static_cast<int>(rest % g.dims[1]), static_cast<int>(rest / g.dims[1])};
}

/// Objective by a per-voxel loop: explicit K(RX + t) projection, rounded pixel
/// lookup, naive Eq. 3 products, long-double accumulation.
inline double BruteForceObjective(const RigParams& theta, const std::vector<ProbabilityImage>& views,
                                  const VoxelGrid& grid, const CameraRig& rig, const CostConfig& config) {
  const std::size_t n = views.size();
  const Mat3 k = rig.intrinsics.Matrix();
  std::vector<Mat3> rot(n);
  std::vector<Vec3> trans(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double roll = v == 0 ? 0.0 : theta.rolls[v - 1];
    rot[v] = RotationZ(theta.yaw) * RotationX(theta.pitch) * RotationY(roll);
    trans[v] = Vec3(0, 0, rig.nominal_distance + theta.trans);
  }
  const double eps = config.epsilon;
  long double total = 0.0L;
  for (std::size_t idx = 0; idx < grid.Count(); ++idx) {
    const auto [i, j, kk] = DecomposeIndex(grid, idx);
    const Vec3 q = grid.origin + grid.spacing * Vec3(i + 0.5, j + 0.5, kk + 0.5);
    if (config.support == VoxelSupport::kBall) {
      const Vec3 center = grid.origin + 0.5 * grid.spacing * Vec3(grid.dims[0], grid.dims[1], grid.dims[2]);
      const double radius = 0.5 * grid.spacing * std::min({grid.dims[0], grid.dims[1], grid.dims[2]});
      if ((q - center).squaredNorm() > radius * radius) continue;
    }
    std::vector<double> pf, pb;
    for (std::size_t v = 0; v < n; ++v) {
      const Vec3 h = k * (rot[v] * q + trans[v]);
      const long col = h.z() > 0 ? std::lround(h.x() / h.z()) : -1;
      const long row = h.z() > 0 ? std::lround(h.y() / h.z()) : -1;
      const auto& img = views[v];
      if (col >= 0 && col < img.width && row >= 0 && row < img.height) {
        pf.push_back(img.pf[static_cast<std::size_t>(row) * img.width + col]);
        pb.push_back(img.pb[static_cast<std::size_t>(row) * img.width + col]);
      } else {
        pf.push_back(eps);
        pb.push_back(1.0 - eps);
      }
    }
    const VoxelEvidence e = NaiveJointEvidence(pf, pb, eps);
    total += std::log(static_cast<long double>(e.pf)) - std::log(static_cast<long double>(e.pb));
  }
  return static_cast<double>(total);
}

/// Random probability maps with pf + pb = 1 and pf in [lo, 1 - lo].
inline std::vector<ProbabilityImage> RandomViews(std::size_t n, int w, int h, double lo, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, 1.0 - lo);
  std::vector<ProbabilityImage> views;
  for (std::size_t v = 0; v < n; ++v) {
    ProbabilityImage img(w, h);
    for (std::size_t i = 0; i < img.pf.size(); ++i) {
      img.pf[i] = u(rng);
      img.pb[i] = 1.0 - img.pf[i];
    }
    views.push_back(std::move(img));
  }
  return views;
}

/// Closed axis-aligned box [lo, hi] as 12 outward-facing triangles.
inline TriangleMesh BoxMesh(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  for (int c = 0; c < 8; ++c) m.vertices.emplace_back(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(), c & 4 ? hi.z() : lo.z());
  const std::uint32_t quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.triangles.push_back({q[0], q[1], q[2]});
    m.triangles.push_back({q[0], q[2], q[3]});
  }
  return m;
}

/// Appends `b` to `a`.
inline TriangleMesh Merge(TriangleMesh a, const TriangleMesh& b) {
  const auto offset = static_cast<std::uint32_t>(a.vertices.size());
  a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto t : b.triangles) a.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  return a;
}

/// Sphere occupancy with a linear one-voxel transition band around radius r.
inline OccupancyVolume SphereVolume(double r, int res, double half_extent) {
  OccupancyVolume vol;
  vol.grid = InitGrid(Vec3::Zero(), Vec3::Constant(half_extent), {res, res, res});
  vol.occupancy.resize(vol.grid.Count());
  for (std::size_t idx = 0; idx < vol.grid.Count(); ++idx) {
    const auto [i, j, k] = DecomposeIndex(vol.grid, idx);
    const double d = vol.grid.Center(i, j, k).norm() - r;
    vol.occupancy[idx] = std::clamp(0.5 - d / vol.grid.spacing, 0.0, 1.0);
  }
  return vol;
}

/// Random rotation from a normalised Gaussian quaternion.
inline Mat3 RandomRotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

}  // namespace circcal::oracle
