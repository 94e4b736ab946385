#include "dasfm/so3.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "dasfm/error.hpp"

namespace dasfm {

namespace {

constexpr double kSmallAngle = 1e-8;

Vec3 antisymmetric_vee(const Mat3& a) {
  return 0.5 * Vec3(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0), a(1, 0) - a(0, 1));
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& r) {
  const double ortho = (r * r.transpose() - Mat3::Identity()).norm();
  if (!(ortho <= 1e-9) || std::abs(r.determinant() - 1.0) > 1e-9) {
    fail(ErrorCode::NotARotation, "matrix is not a proper rotation (orthogonality defect " +
                                      std::to_string(ortho) + ")");
  }
  return Rotation(r, Unchecked{});
}

double Rotation::orthogonality_error() const {
  return (r_ * r_.transpose() - Mat3::Identity()).norm();
}

Mat3 hat(const Vec3& v) {
  Mat3 a;
  a << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return a;
}

Vec3 vee(const Mat3& a) {
  if (!((a + a.transpose()).norm() < 1e-9)) {
    fail(ErrorCode::NotSkewSymmetric, "vee: matrix is not skew-symmetric");
  }
  return antisymmetric_vee(a);
}

Rotation exp_so3(const AxisAngle& v) {
  const double theta = v.norm();
  const Mat3 k = hat(v);
  if (theta < kSmallAngle) {
    return Rotation(Mat3::Identity() + k + 0.5 * k * k, Rotation::Unchecked{});
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Rotation(Mat3::Identity() + a * k + b * k * k, Rotation::Unchecked{});
}

AxisAngle log_so3(const Rotation& r) {
  const Mat3& m = r.matrix();
  const double tr = m.trace();
  if (tr <= -1.0 + 1e-6) {
    fail(ErrorCode::NearPiAmbiguity, "log_so3: rotation angle too close to pi");
  }
  const Vec3 w = antisymmetric_vee(m);
  const double s = w.norm();
  const double theta = std::atan2(s, 0.5 * (tr - 1.0));
  if (theta < kSmallAngle) {
    return (1.0 + theta * theta / 6.0) * w;
  }
  return (theta / s) * w;
}

double rotation_angle(const Rotation& r) {
  const Mat3& m = r.matrix();
  return std::atan2(antisymmetric_vee(m).norm(), 0.5 * (m.trace() - 1.0));
}

Rotation closest_rotation(const Mat3& a) {
  Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) *= -1.0;
  }
  return Rotation(u * v.transpose(), Rotation::Unchecked{});
}

Rotation project_to_so3(const Mat3& a) {
  Eigen::JacobiSVD<Mat3> svd(a);
  if (!(svd.singularValues()(2) > 1e-12)) {
    fail(ErrorCode::DegenerateMatrix, "project_to_so3: matrix is (near) singular");
  }
  return closest_rotation(a);
}

}  // namespace dasfm
