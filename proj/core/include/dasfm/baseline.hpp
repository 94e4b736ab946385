#pragma once

#include <vector>

#include "dasfm/sim.hpp"
#include "dasfm/so3.hpp"
#include "dasfm/types.hpp"

namespace dasfm::baseline {

struct DeadReckonState {
  Rotation R;
  Vec3 T = Vec3::Zero();
  Vec3 v = Vec3::Zero();  // spatial frame
};

// Strapdown integration of gyro and accelerometer readings alone. Returns
// one state per sample; state 0 is `init`. Throws LengthMismatch when the
// series lengths differ.
std::vector<DeadReckonState> imu_dead_reckon(const Series3& gyro, const Series3& accel,
                                             const sim::Gravity& g, const DeadReckonState& init,
                                             double t_s);

}  // namespace dasfm::baseline
