#include "circcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "circcal/error.hpp"
#include "circcal/parallel.hpp"

namespace circcal {

namespace {

// Maps world coordinates into the ellipsoid's unit-sphere frame.
Vec3 ToUnit(const Ellipsoid& e, const Vec3& v) { return (e.orientation.transpose() * v).cwiseQuotient(e.semi_axes); }

}  // namespace

bool Ellipsoid::Contains(const Vec3& p) const { return ToUnit(*this, p - center).squaredNorm() <= 1.0; }

bool Ellipsoid::RayHits(const Vec3& origin, const Vec3& dir) const {
  const Vec3 o = ToUnit(*this, origin - center);
  const Vec3 d = ToUnit(*this, dir);
  const double a = d.squaredNorm();
  const double b = o.dot(d);
  const double c = o.squaredNorm() - 1.0;
  const double disc = b * b - a * c;
  if (disc < 0.0) return false;
  // Far root must be in front of the origin.
  return (-b + std::sqrt(disc)) / a > 0.0;
}

Vec3 Ellipsoid::BoxHalfExtent() const {
  Vec3 h;
  for (int r = 0; r < 3; ++r) h[r] = orientation.row(r).cwiseProduct(semi_axes.transpose()).norm();
  return h;
}

bool Phantom::Contains(const Vec3& p) const {
  return std::any_of(components.begin(), components.end(), [&](const Ellipsoid& e) { return e.Contains(p); });
}

bool Phantom::RayHits(const Vec3& origin, const Vec3& dir) const {
  return std::any_of(components.begin(), components.end(), [&](const Ellipsoid& e) { return e.RayHits(origin, dir); });
}

Phantom FishPhantom() {
  Phantom p;
  // body
  p.components.push_back({Vec3(0.15, 0.1, 0.05), Vec3(0.32, 1.05, 0.24), RotationY(DegToRad(20.0)) * RotationZ(DegToRad(5.0))});
  // head and yolk
  p.components.push_back({Vec3(0.3, -0.55, -0.15), Vec3(0.38, 0.42, 0.3), RotationY(DegToRad(-30.0))});
  // flat tail fin
  p.components.push_back({Vec3(-0.05, 0.95, 0.25), Vec3(0.08, 0.45, 0.42), RotationY(DegToRad(10.0))});
  return p;
}

void CheckPhantom(const Phantom& phantom, const VoxelGrid& grid) {
  if (phantom.components.empty()) throw InvalidParameter("phantom has no components");
  const Vec3 lo = grid.origin;
  const Vec3 hi = grid.origin + grid.spacing * Vec3(grid.dims[0], grid.dims[1], grid.dims[2]);
  for (const auto& e : phantom.components) {
    if (!(e.semi_axes.array() > 0.0).all()) throw InvalidParameter("ellipsoid semi-axes must be positive");
    const Vec3 h = e.BoxHalfExtent();
    if (((e.center - h).array() < lo.array()).any() || ((e.center + h).array() > hi.array()).any())
      throw InvalidParameter("phantom does not fit inside the voxel grid");
  }
}

void CheckScenario(const ScenarioTruth& truth) {
  if (truth.theta_gt.ViewCount() < 2) throw InvalidParameter("scenario needs at least 2 views");
  if (!truth.theta_gt.IsFinite()) throw InvalidParameter("scenario ground truth is not finite");
  if (!(truth.noise.flip_rate >= 0.0 && truth.noise.flip_rate < 0.5))
    throw InvalidParameter("label flip rate must lie in [0, 0.5)");
  if (truth.noise.blur_radius < 0) throw InvalidParameter("blur radius must be >= 0");
  if (truth.image_width < 1 || truth.image_height < 1) throw InvalidParameter("image size must be positive");
  CheckGrid(truth.grid);
}

std::vector<std::vector<std::uint8_t>> RenderSilhouettes(const Phantom& phantom, const ScenarioTruth& truth,
                                                         int workers) {
  CheckScenario(truth);
  const std::size_t n = truth.theta_gt.ViewCount();
  const int w = truth.image_width, h = truth.image_height;
  const Mat3 k_inv = truth.rig.intrinsics.Matrix().inverse();
  std::vector<std::vector<std::uint8_t>> masks(n);
  ParallelFor(n, workers, [&](std::size_t view) {
    const Extrinsics ext = BuildExtrinsics(truth.theta_gt, view, truth.rig.nominal_distance);
    const Mat3 rt = ext.rotation.transpose();
    const Vec3 camera_center = -rt * ext.translation;
    auto& mask = masks[view];
    mask.assign(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Vec3 dir = rt * (k_inv * Vec3(x, y, 1.0));
        mask[static_cast<std::size_t>(y) * w + x] = phantom.RayHits(camera_center, dir) ? 1 : 0;
      }
    }
  });
  return masks;
}

namespace {

// Separable (2r+1)^2 box mean with clamp-to-edge borders.
std::vector<double> BoxBlur(const std::vector<double>& src, int w, int h, int r) {
  if (r <= 0) return src;
  std::vector<double> tmp(src.size()), out(src.size());
  const double norm = 1.0 / (2 * r + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d) s += src[static_cast<std::size_t>(y) * w + std::clamp(x + d, 0, w - 1)];
      tmp[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -r; d <= r; ++d) s += tmp[static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = s * norm;
    }
  return out;
}

}  // namespace

std::vector<ProbabilityImage> ViewsFromSilhouettes(const std::vector<std::vector<std::uint8_t>>& silhouettes,
                                                   const ScenarioTruth& truth) {
  CheckScenario(truth);
  const int w = truth.image_width, h = truth.image_height;
  std::size_t hits = 0;
  for (const auto& m : silhouettes) hits += static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
  if (hits == 0) throw NumericError("degenerate scenario: the phantom is not visible in any view");

  constexpr double lo = kProbabilityEpsilon, hi = 1.0 - kProbabilityEpsilon;
  std::vector<ProbabilityImage> views;
  views.reserve(silhouettes.size());
  for (std::size_t v = 0; v < silhouettes.size(); ++v) {
    ProbabilityImage img(w, h);
    std::mt19937_64 rng(truth.noise.seed + 0x9E3779B97F4A7C15ULL * (v + 1));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::size_t i = 0; i < img.pf.size(); ++i) {
      bool fg = silhouettes[v][i] != 0;
      if (truth.noise.flip_rate > 0.0 && uniform(rng) < truth.noise.flip_rate) fg = !fg;
      img.pf[i] = fg ? hi : lo;
      img.pb[i] = fg ? lo : hi;
    }
    if (truth.noise.blur_radius > 0) {
      img.pf = BoxBlur(img.pf, w, h, truth.noise.blur_radius);
      img.pb = BoxBlur(img.pb, w, h, truth.noise.blur_radius);
      for (std::size_t i = 0; i < img.pf.size(); ++i) {
        img.pf[i] = std::clamp(img.pf[i], lo, hi);
        img.pb[i] = std::clamp(img.pb[i], lo, hi);
      }
    }
    views.push_back(std::move(img));
  }
  return views;
}

std::vector<ProbabilityImage> RenderViews(const Phantom& phantom, const ScenarioTruth& truth, int workers) {
  return ViewsFromSilhouettes(RenderSilhouettes(phantom, truth, workers), truth);
}

RgbImage RenderPhoto(const std::vector<std::uint8_t>& silhouette, int width, int height, const Rgb& fg_color,
                     const Rgb& bg_color, double color_sigma, std::uint64_t seed) {
  RgbImage img(width, height);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, color_sigma > 0.0 ? color_sigma : 1.0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Rgb& base = silhouette[static_cast<std::size_t>(y) * width + x] ? fg_color : bg_color;
      auto* px = img.Pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double v = base[c] + (color_sigma > 0.0 ? normal(rng) : 0.0);
        px[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  return img;
}

GrayImage AnnotationFromSilhouette(const std::vector<std::uint8_t>& silhouette, int width, int height, int margin) {
  GrayImage labels(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      int fg = 0, total = 0;
      for (int dy = -margin; dy <= margin; ++dy)
        for (int dx = -margin; dx <= margin; ++dx) {
          const int xx = std::clamp(x + dx, 0, width - 1), yy = std::clamp(y + dy, 0, height - 1);
          fg += silhouette[static_cast<std::size_t>(yy) * width + xx] ? 1 : 0;
          ++total;
        }
      labels.At(x, y) = fg == total ? kLabelForeground : (fg == 0 ? kLabelBackground : 128);
    }
  return labels;
}

std::vector<std::size_t> PerturbIndices(std::size_t roll_count, std::size_t k, std::uint64_t seed) {
  if (k > roll_count) throw InvalidParameter("cannot perturb more rolls than the rig has");
  std::vector<std::size_t> idx(roll_count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with an explicit draw keeps the selection portable.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (roll_count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

RigParams Perturb(const RigParams& theta, std::size_t k, double delta, std::uint64_t seed) {
  RigParams out = theta;
  for (std::size_t i : PerturbIndices(theta.rolls.size(), k, seed)) out.rolls[i] += delta;
  return out;
}

double AngularDistanceDeg(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

RecoveryScore ScoreRecovery(const RigParams& estimate, const RigParams& truth) {
  if (estimate.rolls.size() != truth.rolls.size()) throw InvalidParameter("view counts differ");
  RecoveryScore s;
  for (std::size_t i = 0; i < truth.rolls.size(); ++i) {
    const double e = AngularDistanceDeg(RadToDeg(estimate.rolls[i]), RadToDeg(truth.rolls[i]));
    s.roll_err_deg.push_back(e);
    s.mae_roll_deg += e;
    s.max_roll_deg = std::max(s.max_roll_deg, e);
  }
  if (!truth.rolls.empty()) s.mae_roll_deg /= static_cast<double>(truth.rolls.size());
  s.yaw_err_deg = AngularDistanceDeg(RadToDeg(estimate.yaw), RadToDeg(truth.yaw));
  s.pitch_err_deg = AngularDistanceDeg(RadToDeg(estimate.pitch), RadToDeg(truth.pitch));
  s.trans_err_mm = std::abs(estimate.trans - truth.trans);
  return s;
}

RigParams ScenarioTheta(int view_count, double yaw, double pitch, double trans, double roll_jitter,
                        std::uint64_t seed) {
  if (view_count < 2) throw InvalidParameter("scenario needs at least 2 views");
  RigParams theta;
  theta.yaw = yaw;
  theta.pitch = pitch;
  theta.trans = trans;
  std::mt19937_64 rng(seed);
  const double step = 2.0 * std::numbers::pi / view_count;
  for (int i = 1; i < view_count; ++i) {
    // 53-bit uniform in [0, 1) from the raw engine output.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    theta.rolls.push_back(i * step + roll_jitter * (2.0 * u - 1.0));
  }
  return theta;
}

}  // namespace circcal
