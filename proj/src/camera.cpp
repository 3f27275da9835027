#include "circcal/camera.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "circcal/error.hpp"

namespace circcal {

namespace {

bool PositiveFinite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

Mat3 CameraIntrinsics::Matrix() const {
  Mat3 k;
  k << focal_length * scale_x, 0.0, principal_x,
       0.0, focal_length * scale_y, principal_y,
       0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::CheckAgainstImage(int width, int height) const {
  if (principal_x < 0.0 || principal_x > width || principal_y < 0.0 || principal_y > height) {
    std::ostringstream msg;
    msg << "principal point (" << principal_x << ", " << principal_y << ") lies outside the " << width << "x"
        << height << " image";
    throw InvalidParameter(msg.str());
  }
}

CameraIntrinsics BuildIntrinsics(double f, double kx, double ky, double cx, double cy) {
  if (!PositiveFinite(f)) throw InvalidParameter("focal length must be positive and finite");
  if (!PositiveFinite(kx) || !PositiveFinite(ky)) throw InvalidParameter("pixel scales must be positive and finite");
  if (!std::isfinite(cx) || !std::isfinite(cy)) throw InvalidParameter("principal point must be finite");
  return CameraIntrinsics{f, kx, ky, cx, cy};
}

Eigen::VectorXd RigParams::Flatten() const {
  Eigen::VectorXd v(3 + rolls.size());
  v[0] = yaw;
  v[1] = pitch;
  v[2] = trans;
  for (std::size_t i = 0; i < rolls.size(); ++i) v[3 + i] = rolls[i];
  return v;
}

RigParams RigParams::Unflatten(const Eigen::VectorXd& v) {
  if (v.size() < 4) throw InvalidParameter("flattened rig vector needs at least 4 entries (N >= 2)");
  RigParams p;
  p.yaw = v[0];
  p.pitch = v[1];
  p.trans = v[2];
  p.rolls.assign(v.data() + 3, v.data() + v.size());
  return p;
}

bool RigParams::IsFinite() const {
  if (!std::isfinite(yaw) || !std::isfinite(pitch) || !std::isfinite(trans)) return false;
  for (double r : rolls)
    if (!std::isfinite(r)) return false;
  return true;
}

Mat3 RotationX(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 RotationY(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 RotationZ(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

double WrapAngle(double angle) {
  double w = std::remainder(angle, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

Extrinsics BuildExtrinsics(const RigParams& theta, std::size_t view_index, double nominal_distance) {
  if (view_index >= theta.ViewCount()) {
    std::ostringstream msg;
    msg << "view index " << view_index << " out of range for " << theta.ViewCount() << " views";
    throw InvalidParameter(msg.str());
  }
  Extrinsics e;
  e.rotation = RotationZ(theta.yaw) * RotationX(theta.pitch) * RotationY(theta.Roll(view_index));
  e.translation = Vec3(0.0, 0.0, nominal_distance + theta.trans);
  return e;
}

ProjectionMatrix BuildProjection(const CameraIntrinsics& intrinsics, const Extrinsics& extrinsics) {
  ProjectionMatrix rt;
  rt.leftCols<3>() = extrinsics.rotation;
  rt.col(3) = extrinsics.translation;
  return intrinsics.Matrix() * rt;
}

std::vector<ProjectionMatrix> BuildProjections(const RigParams& theta, const CameraIntrinsics& intrinsics,
                                               double nominal_distance) {
  std::vector<ProjectionMatrix> out;
  out.reserve(theta.ViewCount());
  for (std::size_t v = 0; v < theta.ViewCount(); ++v)
    out.push_back(BuildProjection(intrinsics, BuildExtrinsics(theta, v, nominal_distance)));
  return out;
}

ProjectionFactors DecomposeProjection(const ProjectionMatrix& projection) {
  ProjectionMatrix p = projection;
  Mat3 m = p.leftCols<3>();
  const double det = m.determinant();
  if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) throw NumericError("projection matrix is rank deficient");
  if (det < 0.0) {
    p = -p;
    m = -m;
  }

  // RQ via QR of the row-reversed transpose.
  Mat3 flip;
  flip << 0, 0, 1,
          0, 1, 0,
          1, 0, 0;
  Eigen::HouseholderQR<Mat3> qr((flip * m).transpose());
  Mat3 q = qr.householderQ();
  Mat3 r = qr.matrixQR().triangularView<Eigen::Upper>();
  Mat3 k = flip * r.transpose() * flip;
  Mat3 rot = flip * q.transpose();

  Mat3 signs = Mat3::Identity();
  for (int i = 0; i < 3; ++i)
    if (k(i, i) < 0.0) signs(i, i) = -1.0;
  k = k * signs;
  rot = signs * rot;

  ProjectionFactors out;
  const double scale = k(2, 2);
  out.intrinsic = k / scale;
  out.extrinsics.rotation = rot;
  out.extrinsics.translation = out.intrinsic.triangularView<Eigen::Upper>().solve(p.col(3) / scale);
  return out;
}

Vec2 ProjectPoint(const ProjectionMatrix& projection, const Vec3& point) {
  const Vec3 h = projection.leftCols<3>() * point + projection.col(3);
  if (!(h.z() > kDepthEpsilon)) throw NumericError("point projects behind the camera");
  return Vec2(h.x() / h.z(), h.y() / h.z());
}

}  // namespace circcal
