#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "circcal/image.hpp"

namespace circcal {

/// Probability clamp applied to every per-pixel and per-voxel probability.
inline constexpr double kProbabilityEpsilon = 1e-6;
/// Smallest admissible covariance eigenvalue, in normalised RGB units.
inline constexpr double kCovarianceFloor = 1e-4;

using Rgb = Eigen::Vector3d;

/// Trivariate normal color model. Construction enforces a symmetric covariance
/// whose eigenvalues are at least kCovarianceFloor.
class ColorGaussian {
 public:
  ColorGaussian() : ColorGaussian(Rgb::Constant(0.5), Eigen::Matrix3d::Identity()) {}

  /// Validates (does not regularise) the parameters. Throws kInvalidParameter on
  /// an out-of-range mean or a covariance that is not SPD above the floor.
  ColorGaussian(const Rgb& mean, const Eigen::Matrix3d& covariance);

  const Rgb& mean() const { return mean_; }
  const Eigen::Matrix3d& covariance() const { return covariance_; }

  double Density(const Rgb& rgb) const;
  double LogDensity(const Rgb& rgb) const;

  bool operator==(const ColorGaussian& o) const { return mean_ == o.mean_ && covariance_ == o.covariance_; }

 private:
  Rgb mean_;
  Eigen::Matrix3d covariance_;
  Eigen::Matrix3d precision_;
  double log_normalizer_ = 0.0;  // -0.5 * log((2 pi)^3 |Sigma|)
};

/// Sample mean and unbiased sample covariance, eigenvalues floored at
/// kCovarianceFloor. Needs at least 4 samples.
ColorGaussian FitGaussian(std::span<const Rgb> samples);

double EvalDensity(const ColorGaussian& g, const Rgb& rgb);

/// Per-pixel foreground/background probabilities of one view. pf + pb == 1
/// before clamping to [kProbabilityEpsilon, 1 - kProbabilityEpsilon].
struct ProbabilityImage {
  int width = 0;
  int height = 0;
  std::vector<double> pf;
  std::vector<double> pb;

  ProbabilityImage() = default;
  ProbabilityImage(int w, int h)
      : width(w), height(h), pf(static_cast<std::size_t>(w) * h, 0.5), pb(static_cast<std::size_t>(w) * h, 0.5) {}

  std::size_t Index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

inline Rgb NormalizedRgb(const std::uint8_t* px) { return Rgb(px[0], px[1], px[2]) / 255.0; }

/// Two-class responsibilities of every pixel under the fg/bg models.
ProbabilityImage ProbabilityMap(const RgbImage& image, const ColorGaussian& fg, const ColorGaussian& bg,
                                int workers = 1);

/// pf scaled to 0..255 for inspection.
GrayImage ToGray(const ProbabilityImage& map);

struct AnnotationSamples {
  std::vector<Rgb> foreground;
  std::vector<Rgb> background;
};

inline constexpr std::uint8_t kLabelForeground = 255;
inline constexpr std::uint8_t kLabelBackground = 0;

/// Collects normalised RGB samples under a label image (255 = foreground,
/// 0 = background, anything else ignored). Dimensions must match.
AnnotationSamples CollectSamples(const RgbImage& image, const GrayImage& labels);

struct ColorModelPair {
  ColorGaussian foreground;
  ColorGaussian background;
};

}  // namespace circcal
