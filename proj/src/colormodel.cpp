#include "circcal/colormodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "circcal/error.hpp"
#include "circcal/parallel.hpp"

namespace circcal {

ColorGaussian::ColorGaussian(const Rgb& mean, const Eigen::Matrix3d& covariance) : mean_(mean), covariance_(covariance) {
  if (!mean.allFinite() || (mean.array() < 0.0).any() || (mean.array() > 1.0).any())
    throw InvalidParameter("color mean must lie in [0, 1]");
  if (!covariance.allFinite() || !covariance.isApprox(covariance.transpose(), 0.0))
    throw InvalidParameter("color covariance must be finite and symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(covariance);
  // Small slack so a floored covariance survives a text round trip.
  if (eig.eigenvalues().minCoeff() < kCovarianceFloor * (1.0 - 1e-9))
    throw InvalidParameter("color covariance eigenvalue below the floor");
  precision_ = covariance.inverse();
  log_normalizer_ = -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + std::log(covariance.determinant()));
}

double ColorGaussian::LogDensity(const Rgb& rgb) const {
  const Rgb d = rgb - mean_;
  return log_normalizer_ - 0.5 * d.dot(precision_ * d);
}

double ColorGaussian::Density(const Rgb& rgb) const { return std::exp(LogDensity(rgb)); }

double EvalDensity(const ColorGaussian& g, const Rgb& rgb) { return g.Density(rgb); }

ColorGaussian FitGaussian(std::span<const Rgb> samples) {
  if (samples.size() < 4) {
    std::ostringstream msg;
    msg << "insufficient samples: need at least 4, got " << samples.size();
    throw InvalidParameter(msg.str());
  }
  Rgb mean = Rgb::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& s : samples) {
    const Rgb d = s - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(samples.size() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d floored = eig.eigenvalues().cwiseMax(kCovarianceFloor);
  Eigen::Matrix3d reg = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
  reg = 0.5 * (reg + reg.transpose()).eval();
  return ColorGaussian(mean.cwiseMax(0.0).cwiseMin(1.0), reg);
}

ProbabilityImage ProbabilityMap(const RgbImage& image, const ColorGaussian& fg, const ColorGaussian& bg,
                                int workers) {
  if (image.Empty()) throw InvalidParameter("probability map of an empty image");
  ProbabilityImage out(image.width, image.height);
  constexpr double lo = kProbabilityEpsilon, hi = 1.0 - kProbabilityEpsilon;
  ParallelFor(static_cast<std::size_t>(image.height), workers, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < image.width; ++x) {
      const Rgb c = NormalizedRgb(image.Pixel(x, y));
      // d_f / (d_f + d_b) evaluated as a logistic of the log ratio so that
      // densities underflowing to zero still give a defined responsibility.
      const double r = fg.LogDensity(c) - bg.LogDensity(c);
      const double pf = 1.0 / (1.0 + std::exp(-r));
      const double pb = 1.0 / (1.0 + std::exp(r));
      const std::size_t i = out.Index(x, y);
      out.pf[i] = std::clamp(pf, lo, hi);
      out.pb[i] = std::clamp(pb, lo, hi);
    }
  });
  return out;
}

GrayImage ToGray(const ProbabilityImage& map) {
  GrayImage g(map.width, map.height);
  for (std::size_t i = 0; i < map.pf.size(); ++i)
    g.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.pf[i], 0.0, 1.0) * 255.0));
  return g;
}

AnnotationSamples CollectSamples(const RgbImage& image, const GrayImage& labels) {
  if (image.width != labels.width || image.height != labels.height)
    throw InvalidParameter("annotation image size does not match its photo");
  AnnotationSamples out;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto l = labels.At(x, y);
      if (l == kLabelForeground)
        out.foreground.push_back(NormalizedRgb(image.Pixel(x, y)));
      else if (l == kLabelBackground)
        out.background.push_back(NormalizedRgb(image.Pixel(x, y)));
    }
  }
  return out;
}

}  // namespace circcal
