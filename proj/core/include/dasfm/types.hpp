#pragma once

#include <Eigen/Dense>

namespace dasfm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

// One row per frame.
using Series3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

// Affine projector: drops the depth coordinate.
inline Mat23 projector() {
  Mat23 p = Mat23::Zero();
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  return p;
}

}  // namespace dasfm
