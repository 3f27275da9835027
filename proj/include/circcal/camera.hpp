#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace circcal {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

/// Depth (mm, camera frame) at or below which a point counts as behind the camera.
inline constexpr double kDepthEpsilon = 1e-9;

constexpr double DegToRad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double RadToDeg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Pinhole intrinsics. Focal length in mm, scales in pixels per mm, principal
/// point in pixels (pixel centers sit at integer coordinates).
struct CameraIntrinsics {
  double focal_length = 1.0;
  double scale_x = 1.0;
  double scale_y = 1.0;
  double principal_x = 0.0;
  double principal_y = 0.0;

  Mat3 Matrix() const;
  double FocalPixelsX() const { return focal_length * scale_x; }
  double FocalPixelsY() const { return focal_length * scale_y; }

  /// Throws kInvalidParameter when the principal point falls outside the image.
  void CheckAgainstImage(int width, int height) const;
};

CameraIntrinsics BuildIntrinsics(double f, double kx, double ky, double cx, double cy);

/// Extrinsic parameter vector of a circular-motion rig: yaw and pitch are shared
/// by all views, `trans` offsets the working distance, and rolls[i] is the
/// turntable angle of view i+1 (view 0 is the 0-angle reference).
/// All angles in radians, trans in mm.
struct RigParams {
  double yaw = 0.0;
  double pitch = 0.0;
  double trans = 0.0;
  std::vector<double> rolls;

  std::size_t ViewCount() const { return rolls.size() + 1; }
  double Roll(std::size_t view) const { return view == 0 ? 0.0 : rolls.at(view - 1); }

  /// Flat layout [yaw, pitch, trans, rolls...]; length 3 + N - 1.
  Eigen::VectorXd Flatten() const;
  static RigParams Unflatten(const Eigen::VectorXd& v);

  bool IsFinite() const;
  bool operator==(const RigParams&) const = default;
};

struct Extrinsics {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

/// Camera pose of one view: X_cam = R * X_world + t with
///   R = Rz(yaw) * Rx(pitch) * Ry(roll_view),  t = (0, 0, nominal_distance + trans).
/// The turntable axis is world +y through the origin.
Extrinsics BuildExtrinsics(const RigParams& theta, std::size_t view_index, double nominal_distance);

ProjectionMatrix BuildProjection(const CameraIntrinsics& intrinsics, const Extrinsics& extrinsics);

/// All N projection matrices for a rig.
std::vector<ProjectionMatrix> BuildProjections(const RigParams& theta, const CameraIntrinsics& intrinsics,
                                               double nominal_distance);

struct ProjectionFactors {
  Mat3 intrinsic;  // upper triangular, positive diagonal, (2,2) == 1
  Extrinsics extrinsics;
};

/// RQ factorisation P = K [R | t]. Throws kNumeric for rank-deficient input.
ProjectionFactors DecomposeProjection(const ProjectionMatrix& projection);

/// Projects a world point to pixel coordinates. Throws kNumeric when the
/// homogeneous depth is <= kDepthEpsilon.
Vec2 ProjectPoint(const ProjectionMatrix& projection, const Vec3& point);

Mat3 RotationX(double angle);
Mat3 RotationY(double angle);
Mat3 RotationZ(double angle);

/// Wraps an angle in radians to (-pi, pi].
double WrapAngle(double angle);

}  // namespace circcal
