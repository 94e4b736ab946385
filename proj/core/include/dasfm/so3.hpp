#pragma once

#include "dasfm/types.hpp"

namespace dasfm {

// A proper rotation matrix. Instances are only produced by the so3
// operations or by `from_matrix`, which validates orthonormality and
// det = +1 to 1e-9.
class Rotation {
 public:
  Rotation() : r_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& r);

  const Mat3& matrix() const { return r_; }
  Mat3 transpose() const { return r_.transpose(); }
  Rotation inverse() const { return Rotation(r_.transpose(), Unchecked{}); }

  Rotation operator*(const Rotation& o) const { return Rotation(r_ * o.r_, Unchecked{}); }
  Vec3 operator*(const Vec3& v) const { return r_ * v; }

  // Orthonormality defect ||R R^T - I||_F.
  double orthogonality_error() const;

 private:
  struct Unchecked {};
  Rotation(const Mat3& r, Unchecked) : r_(r) {}
  Mat3 r_;

  friend Rotation exp_so3(const Vec3& v);
  friend Rotation closest_rotation(const Mat3& a);
};

using AxisAngle = Vec3;

// v -> [v]x, so that hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

// Inverse of hat. Throws NotSkewSymmetric when ||A + A^T|| >= 1e-9.
Vec3 vee(const Mat3& a);

// Rodrigues formula; second-order Taylor expansion below |v| = 1e-8.
Rotation exp_so3(const AxisAngle& v);

// Principal logarithm. Throws NearPiAmbiguity when trace(R) <= -1 + 1e-6.
AxisAngle log_so3(const Rotation& r);

// Geodesic angle |log(R)|, valid over the whole group including angle pi.
double rotation_angle(const Rotation& r);

// Nearest rotation in Frobenius norm. Throws DegenerateMatrix when the
// smallest singular value of `a` is <= 1e-12.
Rotation project_to_so3(const Mat3& a);

// Same projection without the conditioning check; rank-deficient inputs
// (e.g. a cross-covariance of coplanar points) still yield a rotation.
Rotation closest_rotation(const Mat3& a);

}  // namespace dasfm
